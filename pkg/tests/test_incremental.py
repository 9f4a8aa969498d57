from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frictio.core import ContactState, StiffnessMatrix2, check_incremental_kkt, critical_friction
from frictio.errors import NonPositiveLoad, NotCritical, SupercriticalFriction
from frictio.incremental import (
    LARGEST,
    SMALLEST,
    STICK,
    TrescaProblem,
    continuum_family,
    lipschitz_probe,
    pressure_map,
    sigma_upper_bound,
    solve_incremental,
    tresca_minimize,
    tresca_objective,
)
from frictio.oracle import coulomb_enumerate, tresca_brute

from conftest import random_spd


def _tp(K, F, w, s):
    return TrescaProblem(K, F, w, s)


# Tresca step -------------------------------------------------------------------


def test_tresca_zero(K212):
    st_ = tresca_minimize(_tp(K212, (0, 0), 0, 0))
    assert st_ == ContactState(0.0, 0.0, 0.0, 0.0)


def test_tresca_interior_free(K212):
    st_ = tresca_minimize(_tp(K212, (1, 3), 0, 0))
    np.testing.assert_allclose(st_.u, [-1 / 3, 5 / 3], atol=1e-15)
    np.testing.assert_allclose(st_.t, [0, 0], atol=1e-15)
    np.testing.assert_allclose(tresca_brute(K212.matrix, (1, 3), 0, 0), st_.u, atol=1e-6)


def test_tresca_stick_above_bound(K212):
    st_ = tresca_minimize(_tp(K212, (-1, 0), 1, 2))
    np.testing.assert_allclose(st_.u, [-1, 1], atol=1e-15)
    np.testing.assert_allclose(st_.t, [0, 1], atol=1e-15)


def test_tresca_rejects_negative_bound(K212):
    with pytest.raises(ValueError):
        _tp(K212, (0, 0), 0, -1)


def _tresca_kkt_residual(K, F, w, sigma, st_):
    """Largest violation of the optimality conditions of the Tresca step."""
    t = K.matrix @ st_.u - np.asarray(F)
    res = [abs(t[0] - st_.t_n), abs(t[1] - st_.t_t)]
    res += [max(st_.u_n, 0.0), max(st_.t_n, 0.0), abs(st_.u_n * st_.t_n)]
    res.append(max(abs(st_.t_t) - sigma, 0.0))
    d = st_.u_t - w
    if abs(d) > 1e-12:
        res.append(abs(st_.t_t + math.copysign(sigma, d)))
    return max(res)


def test_tresca_kkt_sound():
    rng = np.random.default_rng(11)
    for _ in range(2000):
        K = random_spd(rng, coupling_sign=rng.choice([-1.0, 1.0]))
        F, w, sigma = rng.uniform(-2, 2, 2), rng.uniform(-1, 1), rng.uniform(0, 3)
        st_ = tresca_minimize(_tp(K, F, w, sigma))
        assert _tresca_kkt_residual(K, F, w, sigma, st_) <= 1e-12


def test_tresca_global_optimality():
    rng = np.random.default_rng(12)
    for _ in range(100):
        K = random_spd(rng)
        F, w, sigma = rng.uniform(-2, 2, 2), rng.uniform(-1, 1), rng.uniform(0, 3)
        st_ = tresca_minimize(_tp(K, F, w, sigma))
        best = tresca_objective(K, F, w, sigma, st_.u)
        v = np.column_stack([-rng.exponential(1.0, 100_000), rng.uniform(-4, 4, 100_000)])
        vals = 0.5 * np.einsum("ni,ij,nj->n", v, K.matrix, v) - v @ F + sigma * np.abs(v[:, 1] - w)
        assert best <= vals.min() + 1e-12


# bounds and the pressure map --------------------------------------------------


def test_sigma_upper_bound_examples(K212):
    assert sigma_upper_bound(K212, (-1, 0), 1, 1) == 1.0
    assert sigma_upper_bound(K212, (0, 0), 0, 0.7) == 0.0
    assert sigma_upper_bound(K212, (3, 0), 0, 2) == 6.0


def test_sigma_upper_bound_makes_tresca_stick():
    rng = np.random.default_rng(13)
    for _ in range(500):
        K = random_spd(rng)
        F, w, f = rng.uniform(-2, 2, 2), rng.uniform(-1, 1), rng.uniform(0, 3)
        s1 = sigma_upper_bound(K, F, w, f)
        st_ = tresca_minimize(_tp(K, F, w, s1 * (1 + 1e-12) + 1e-14))
        assert st_.u_t == pytest.approx(w, abs=1e-12)


def test_pressure_map_examples(K212):
    assert pressure_map(_tp(K212, (-1, 0), 0, 0), 1.0) == 0.0
    assert pressure_map(_tp(K212, (2, 0), 0, 0), 1.0) == pytest.approx(2.0, abs=1e-15)
    assert pressure_map(_tp(K212, (2, 0), 0, 2), 1.0) == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(tresca_brute(K212.matrix, (2, 0), 0, 0), [0, 0], atol=1e-6)


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_contraction_property(seed):
    rng = np.random.default_rng(seed)
    K = random_spd(rng)
    F, w = rng.uniform(-2, 2, 2), rng.uniform(-1, 1)
    s1, s2 = rng.uniform(0, 4, 2)
    t1 = tresca_minimize(_tp(K, F, w, s1)).t_n
    t2 = tresca_minimize(_tp(K, F, w, s2)).t_n
    assert abs(t1 - t2) <= K.k_nt / K.k_tt * abs(s1 - s2) + 1e-12


# the Coulomb step ----------------------------------------------------------------


def test_solve_zero_load(K212):
    sol = solve_incremental(K212, (0, 0), 0, 1.0)
    assert sol.state == ContactState(0.0, 0.0, 0.0, 0.0)
    assert sol.unique


def test_solve_stick_example(K212):
    sol = solve_incremental(K212, (2, 0), 0, 1.0)
    np.testing.assert_allclose(sol.state.u, [0, 0], atol=1e-15)
    np.testing.assert_allclose(sol.state.t, [-2, 0], atol=1e-12)
    assert sol.regime == STICK and sol.unique


def test_solve_critical_selects(K212):
    small = solve_incremental(K212, (1.5, 3), 0, 2.0, select=SMALLEST)
    large = solve_incremental(K212, (1.5, 3), 0, 2.0, select=LARGEST)
    assert not small.unique and not large.unique
    np.testing.assert_allclose(small.state.u, [0, 1.5], atol=1e-10)
    np.testing.assert_allclose(large.state.u, [0, 0], atol=1e-10)
    for sol in (small, large):
        assert check_incremental_kkt(K212, (1.5, 3), 0, 2.0, sol.state).passed


def test_fixed_point_consistency():
    rng = np.random.default_rng(14)
    for _ in range(500):
        K = random_spd(rng)
        f = rng.uniform(0, 1.5) * min(critical_friction(K), 4.0)
        F, w = rng.uniform(-2, 2, 2), rng.uniform(-1, 1)
        for sel in (SMALLEST, LARGEST):
            sol = solve_incremental(K, F, w, f, select=sel)
            P = pressure_map(_tp(K, F, w, sol.sigma), f)
            assert abs(P - sol.sigma) <= 1e-10 * max(1.0, sol.sigma, np.abs(F).max())


def test_solver_matches_regime_enumeration():
    rng = np.random.default_rng(15)
    for _ in range(500):
        K = random_spd(rng)
        f = rng.uniform(0, 0.99) * min(critical_friction(K), 4.0)
        F, w = rng.uniform(-2, 2, 2), rng.uniform(-1, 1)
        cands = coulomb_enumerate(K.matrix, F, w, f)
        sol = solve_incremental(K, F, w, f)
        assert min(np.abs(c[0] - sol.state.u).max() for c in cands) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.0, 50.0))
def test_positive_homogeneity(seed, alpha):
    rng = np.random.default_rng(seed)
    K = random_spd(rng)
    f = rng.uniform(0, 0.95) * min(critical_friction(K), 4.0)
    F, w = rng.uniform(-2, 2, 2), rng.uniform(-1, 1)
    a = solve_incremental(K, F, w, f).state
    b = solve_incremental(K, alpha * F, alpha * w, f).state
    np.testing.assert_allclose(b.u, alpha * a.u, atol=1e-9 * max(1.0, alpha))


def test_negative_coupling_mirrors():
    rng = np.random.default_rng(16)
    for _ in range(200):
        K = random_spd(rng)
        Km = StiffnessMatrix2(K.k_nn, -K.k_nt, K.k_tt)
        f = rng.uniform(0, 3)
        F, w = rng.uniform(-2, 2, 2), rng.uniform(-1, 1)
        a = solve_incremental(K, F, w, f, select=LARGEST).state
        b = solve_incremental(Km, F * [1, -1], -w, f, select=LARGEST).state
        np.testing.assert_allclose(b.mirrored().u, a.u, atol=1e-9)


# analysis tools ------------------------------------------------------------------


def test_continuum_family_examples(K212):
    fam = continuum_family(K212, 2.0, 3.0)
    np.testing.assert_allclose(fam.F, [1.5, 3.0])
    assert fam.t_n_range == (-1.5, 0.0)
    np.testing.assert_allclose(fam.state(-1.5).u, [0, 0], atol=1e-15)
    np.testing.assert_allclose(fam.state(0.0).u, [0, 1.5], atol=1e-15)
    mid = fam.state(-0.75)
    np.testing.assert_allclose(mid.u, [0, 0.75], atol=1e-15)
    np.testing.assert_allclose(mid.t, [-0.75, -1.5], atol=1e-15)
    assert check_incremental_kkt(K212, fam.F, 0.0, 2.0, mid).passed


def test_continuum_family_errors(K212):
    with pytest.raises(NonPositiveLoad):
        continuum_family(K212, 2.0, 0.0)
    with pytest.raises(NotCritical):
        continuum_family(K212, 1.9, 3.0)


def test_lipschitz_diagonal_bound():
    K = StiffnessMatrix2(2.0, 0.0, 5.0)
    for f in (0.0, 0.5, 3.0):
        c = lipschitz_probe(K, f, trials=2000, seed=3)
        # decoupled scalar problems: normal slope 1/k_nn; the friction bound
        # f|t_n| feeds a normal force change into the tangential equation
        bound = max(1 / K.k_nn, math.hypot(1.0, f) / K.k_tt)
        assert c <= bound + 1e-9
        if f == 0.0:
            assert c <= 1 / min(K.k_nn, K.k_tt) + 1e-9


def test_lipschitz_seed_stability(K212):
    values = [lipschitz_probe(K212, 1.0, trials=10_000, seed=s) for s in range(3)]
    assert max(values) <= 1.1 * min(values)
    assert all(math.isfinite(v) for v in values)


def test_lipschitz_order_independent(K212):
    assert lipschitz_probe(K212, 1.0, trials=300, seed=9) == lipschitz_probe(K212, 1.0, trials=300, seed=9)


def test_lipschitz_rejects_supercritical(K212):
    with pytest.raises(SupercriticalFriction):
        lipschitz_probe(K212, 2.0, trials=10)


def test_tiny_increment_has_no_solver_jitter(K212):
    # states at nearby loads differ by O(|dF|), not by the stopping tolerance
    rng = np.random.default_rng(14)
    for _ in range(200):
        F = rng.uniform(-2, 2, 2)
        dF = rng.uniform(-1, 1, 2) * 1e-13
        a = solve_incremental(K212, F, 0.0, 1.0).state
        b = solve_incremental(K212, F + dF, 0.0, 1.0).state
        assert np.abs(a.u - b.u).max() <= 10 * np.abs(dF).max() + 1e-15
