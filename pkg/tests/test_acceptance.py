"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed as they are produced and again, in order, in the pytest terminal
summary.  Run ``python tests/test_acceptance.py`` for the lines alone.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, random_bv_load, random_lipschitz_load, random_spd  # noqa: E402

from frictio.core import StiffnessMatrix2, check_incremental_kkt, critical_friction  # noqa: E402
from frictio.fem import (  # noqa: E402
    ElasticMaterial,
    march_fem,
    single_triangle_mesh,
    solve_incremental_fem,
    traction_for_force,
    triangle_condensed_stiffness,
)
from frictio.incremental import TrescaProblem, continuum_family, solve_incremental, tresca_minimize  # noqa: E402
from frictio.march import (  # noqa: E402
    build_subdivision,
    interpolant_error,
    march,
    no_continuation_witness,
    paper_jump_scenario,
    rate_independence_probe,
    trajectory_sup_error,
)
from frictio.oracle import edge_quadrature, tresca_brute  # noqa: E402

K212 = StiffnessMatrix2(2.0, 1.0, 2.0)
UNIT = ElasticMaterial(1.0, 0.0)


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_jump_reproduction():
    load, exact = paper_jump_scenario(K212, 1.0, 2.0)
    t0 = time.perf_counter()
    rep = march(K212, load, [0.0, 0.0], 2.0, 2000)
    elapsed = time.perf_counter() - t0
    err = trajectory_sup_error(rep.trajectory, exact)
    ok = len(rep.jumps) == 1
    t, mag = rep.jumps[0] if ok else (float("nan"), float("nan"))
    ok = ok and abs(t - 1.0) <= 1e-9 and abs(mag - 0.5) <= 1e-6 and err <= 1e-6 and elapsed <= 5.0
    record(1, ok, f"jumps={len(rep.jumps)} at s={t:.15g} |du|={mag:.12g} sup error={err:.2e} runtime={elapsed:.2f}s")


def test_criterion_2_jump_unavoidability():
    viol = []
    for eps in (1e-1, 1e-2, 1e-3):
        rep = no_continuation_witness(K212, 1.0, 2.0, eps)
        viol.append((eps, rep.cone))
    ok = all(abs(v - eps) <= 1e-12 for eps, v in viol)
    load, _ = paper_jump_scenario(K212, 1.0, 2.0)
    mags = {}
    for m in (500, 1000, 2000, 4000):
        rep = march(K212, load, [0.0, 0.0], 2.0, m)
        at_one = [mag for t, mag in rep.jumps if abs(t - 1.0) <= 1e-9]
        mags[m] = at_one[0] if len(at_one) == 1 else float("nan")
        ok = ok and len(at_one) == 1 and abs(mags[m] - 0.5) <= 1e-3
    worst = max(abs(v - eps) for eps, v in viol)
    record(2, ok, f"witness |violation-eps| max={worst:.1e}; jump magnitudes " + " ".join(f"m={m}:{v:.9f}" for m, v in mags.items()))


def test_criterion_3_continuum_of_solutions():
    fam = continuum_family(K212, 2.0, 3.0)
    assert np.allclose(fam.F, [1.5, 3.0])
    reps = [check_incremental_kkt(K212, fam.F, 0.0, 2.0, st, tol=1e-10) for st in fam.sample(101)]
    fails = sum(not r.passed for r in reps)
    worst = max(r.max_normalized for r in reps)
    record(3, fails == 0, f"101 states, failures={fails}, max residual={worst:.1e}")


def test_criterion_4_contraction():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    violations, worst = 0, -np.inf
    for _ in range(10_000):
        K = random_spd(rng, coupling_sign=1.0)
        F, w = rng.uniform(-3, 3, 2), rng.uniform(-1, 1)
        s1, s2 = rng.uniform(0, 5, 2)
        t1 = tresca_minimize(TrescaProblem(K, F, w, s1)).t_n
        t2 = tresca_minimize(TrescaProblem(K, F, w, s2)).t_n
        slack = abs(t1 - t2) - K.k_nt / K.k_tt * abs(s1 - s2)
        worst = max(worst, slack)
        violations += slack > 1e-9
    elapsed = time.perf_counter() - t0
    record(4, violations == 0 and elapsed <= 30.0, f"10^4 instances, violations={violations}, max excess={worst:.1e}, runtime={elapsed:.2f}s")


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(5)
    failures, worst = 0, 0.0
    for _ in range(1000):
        K = random_spd(rng, coupling_sign=rng.choice([-1.0, 1.0]))
        F, w, sigma = rng.uniform(-2, 2, 2), rng.uniform(-1, 1), rng.uniform(0, 3)
        a = tresca_minimize(TrescaProblem(K, F, w, sigma)).u
        b = tresca_brute(K.matrix, F, w, sigma)
        err = float(np.abs(a - b).max())
        worst = max(worst, err)
        failures += err > 1e-6
    record(5, failures == 0, f"10^3 instances, failures={failures}, max displacement error={worst:.1e}")


def test_criterion_6_stability():
    rng = np.random.default_rng(6)
    f = 0.5 * critical_friction(K212)
    ratios, jumps = [], 0
    for _ in range(20):
        load = random_lipschitz_load(rng)
        c500 = march(K212, load, [0.0, 0.0], f, 500)
        c4000 = march(K212, load, [0.0, 0.0], f, 4000)
        jumps += len(c500.jumps) + len(c4000.jumps)
        ratios.append(c4000.stability_constant / c500.stability_constant)
    ok = jumps == 0 and all(0.5 <= r <= 2.0 for r in ratios)
    record(6, ok, f"20 loads, C(4000)/C(500) in [{min(ratios):.4f}, {max(ratios):.4f}], jumps={jumps}")


def test_criterion_7_fem_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        A = (rng.uniform(-2, -0.3), 0.0)
        C = (rng.uniform(-1.5, 1.5), rng.uniform(-2, -0.3))
        Kt = triangle_condensed_stiffness(A, (0.0, 0.0), C, UNIT)
        f = rng.uniform(0, 0.99) * min(critical_friction(Kt), 5.0)
        T, w = rng.uniform(-2, 2, 2), rng.uniform(-1, 1)
        Fx, Fy = edge_quadrature(A, C, T)
        ref = solve_incremental(Kt, (Fy, Fx), w, f).state
        uA = solve_incremental_fem(single_triangle_mesh(A, (0.0, 0.0), C), UNIT, [w], f, traction=T).u[0]
        worst = max(worst, abs(uA[1] - ref.u_n), abs(uA[0] - ref.u_t))
    # the jump scenario on the triangle A=(-1,0), B=(0,0), C=(1,-1) at its own critical coefficient
    A, C = (-1.0, 0.0), (1.0, -1.0)
    Kt = triangle_condensed_stiffness(A, (0.0, 0.0), C, UNIT)
    fc = critical_friction(Kt)
    load, exact = paper_jump_scenario(Kt, 1.0, fc)
    tload = load.map_values(lambda F: traction_for_force(F, A, C))
    rep = march_fem(single_triangle_mesh(A, (0.0, 0.0), C), UNIT, tload, fc, 2000)
    sup = trajectory_sup_error(rep.node_trajectory(0), exact)
    one_jump = len(rep.jumps) == 1 and abs(rep.jumps[0][0] - 1.0) <= 1e-9 and abs(rep.jumps[0][1] - exact.jumps[0].magnitude) <= 1e-6
    ok = worst <= 1e-8 and sup <= 1e-6 and one_jump and rep.passed
    record(7, ok, f"100 instances max error={worst:.1e}; fem-march (f_crit={fc:.15g}) sup error={sup:.1e}, jumps={len(rep.jumps)}")


def test_criterion_8_rate_independence():
    rng = np.random.default_rng(8)
    results = []
    for _ in range(10):
        K = random_spd(rng)
        f = rng.uniform(0.0, 1.5) * min(critical_friction(K), 3.0)
        load = random_bv_load(rng)
        results.append(rate_independence_probe(K, load, [0.0, 0.0], f, int(rng.integers(50, 400)), lambda s: s * s, tol=1e-12))
    record(8, all(results), f"10 loads with s -> s^2, coinciding={sum(results)}/10")


def test_criterion_9_interpolant_bound():
    rng = np.random.default_rng(9)
    violations, worst = 0, 0.0
    for _ in range(20):
        load = random_bv_load(rng)
        for m in (10, 100, 1000):
            sub = build_subdivision(load, m)
            err = interpolant_error(load, sub)
            bound = load.total_variation / (m + 1)
            worst = max(worst, err / bound)
            violations += err > bound * (1 + 1e-12)
    record(9, violations == 0, f"60 (load, m) pairs, violations={violations}, max error/bound={worst:.15f}")


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
