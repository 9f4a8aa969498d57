"""Exact solver for one implicit step of the 2-DOF frictional contact problem.

The Coulomb step is written as a fixed point of the pressure map
``P(sigma) = -f t_n(sigma)``, where ``t_n(sigma)`` comes from the Tresca
problem with frozen friction bound ``sigma``.  The Tresca problem itself
is solved in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ContactState, StiffnessMatrix2, check_friction, critical_friction
from .errors import NonConvergence, NonPositiveLoad, NotCritical, SupercriticalFriction

SEPARATED = "separated"
STICK = "stick"
SLIP_POSITIVE = "slip-positive"
SLIP_NEGATIVE = "slip-negative"

SMALLEST = "smallest"
LARGEST = "largest"

FIXED_POINT_TOL = 1e-10
MAX_ITERS = 10_000
# plain iterations tried before switching to the bracketed search
ITERATION_BUDGET = 200
# extra contraction steps allowed after convergence to reach rounding level
POLISH_BUDGET = 100
SCAN_POINTS = 64
# acceptance band on |P(sigma) - sigma| when scanning for roots
ROOT_BAND = 1e-13


@dataclass(frozen=True)
class TrescaProblem:
    K: StiffnessMatrix2
    F: tuple[float, float]
    w_t: float
    sigma: float

    def __post_init__(self):
        F = tuple(float(x) for x in self.F)
        if len(F) != 2:
            raise ValueError("F must have two components")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "w_t", float(self.w_t))
        if not self.sigma >= 0.0:
            raise ValueError(f"friction bound must be >= 0, got {self.sigma}")
        object.__setattr__(self, "sigma", float(self.sigma))


@dataclass(frozen=True)
class IncrementalSolution:
    state: ContactState
    regime: str
    iterations: int
    unique: bool
    sigma: float


def _tresca(knn, knt, ktt, Fn, Ft, wt, sigma):
    """Closed-form minimizer of 1/2 v.Kv - F.v + sigma |v_t - w_t| over v_n <= 0.

    Returns (u_n, u_t, t_n, t_t).  ``knt`` may have either sign.
    """
    # stick: tangential position frozen, normal part projected on v_n <= 0
    un = min(0.0, (Fn - knt * wt) / knn)
    tn = knn * un + knt * wt - Fn if un == 0.0 else 0.0
    tt = knt * un + ktt * wt - Ft
    if abs(tt) <= sigma:
        return un, wt, min(tn, 0.0), tt
    # slip opposite to the excess tangential force; t_t saturates at the bound
    d = -1.0 if tt > 0.0 else 1.0
    tt = -sigma * d
    Fts = Ft + tt
    det = knn * ktt - knt * knt
    un = (ktt * Fn - knt * Fts) / det
    if un <= 0.0:
        ut = (knn * Fts - knt * Fn) / det
        return un, ut, 0.0, tt
    ut = Fts / ktt
    return 0.0, ut, min(knt * ut - Fn, 0.0), tt


def tresca_minimize(p: TrescaProblem) -> ContactState:
    K = p.K
    un, ut, tn, tt = _tresca(K.k_nn, K.coupling, K.k_tt, p.F[0], p.F[1], p.w_t, p.sigma)
    return ContactState(un, ut, tn, tt)


def tresca_objective(K: StiffnessMatrix2, F, w_t: float, sigma: float, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(0.5 * v @ K.matrix @ v - np.dot(F, v) + sigma * abs(v[1] - w_t))


def sigma_upper_bound(K: StiffnessMatrix2, F, w_t: float, f: float) -> float:
    """A-priori bound above which the Tresca minimizer sticks."""
    f = check_friction(f)
    Fn, Ft = float(F[0]), float(F[1])
    c = K.coupling
    gap = c * w_t - Fn
    tang = abs(K.k_tt * w_t - Ft - (c / K.k_nn) * max(gap, 0.0))
    return max(tang, f * max(-gap, 0.0))


def pressure_map(p: TrescaProblem, f: float) -> float:
    """P(sigma) = -f t_n of the Tresca minimizer."""
    f = check_friction(f)
    return -f * tresca_minimize(p).t_n


def classify(state: ContactState, w_t: float, scale: float = 1.0) -> str:
    eps = 1e-14 * max(1.0, scale)
    if state.t_n >= -eps:
        return SEPARATED
    slip = state.u_t - w_t
    if abs(slip) <= eps:
        return STICK
    return SLIP_POSITIVE if slip > 0.0 else SLIP_NEGATIVE


def scalar_fixed_point(
    P: Callable[[float], float],
    upper: float,
    select: str = SMALLEST,
    tol: float = 1e-12,
    scan_points: int = SCAN_POINTS,
) -> tuple[float, int]:
    """Bracketed search for a fixed point of ``P`` on ``[0, upper]``.

    Requires ``P(0) >= 0`` and ``P(upper) <= upper``.  Returns the
    smallest or largest root of ``g = P - id`` found on a uniform scan,
    refined by bisection to ``tol * max(1, upper)``.  Returns
    ``(sigma, evaluations)``.
    """
    width = max(1.0, upper)
    band = ROOT_BAND * width
    g = lambda s: P(s) - s  # noqa: E731
    evals = 1
    if select == SMALLEST:
        if g(0.0) <= band:
            return 0.0, evals
        prev = 0.0
        for k in range(1, scan_points + 1):
            s = upper * k / scan_points
            evals += 1
            if g(s) <= band:
                lo, hi = prev, s
                break
            prev = s
        else:
            raise NonConvergence("no sign change of P(sigma) - sigma on the bracket", evals)
        # invariant: g(lo) > band, g(hi) <= band
    elif select == LARGEST:
        if g(upper) >= -band:
            return upper, evals
        prev = upper
        for k in range(scan_points - 1, -1, -1):
            s = upper * k / scan_points
            evals += 1
            if g(s) >= -band:
                lo, hi = s, prev
                break
            prev = s
        else:
            raise NonConvergence("no sign change of P(sigma) - sigma on the bracket", evals)
        # invariant: g(lo) >= -band, g(hi) < -band
    else:
        raise ValueError(f"unknown selection rule {select!r}")
    while hi - lo > tol * width:
        mid = 0.5 * (lo + hi)
        evals += 1
        gm = g(mid)
        if select == SMALLEST:
            if gm <= band:
                hi = mid
            else:
                lo = mid
        else:
            if gm >= -band:
                lo = mid
            else:
                hi = mid
    return (hi if select == SMALLEST else lo), evals


def _polish(P: Callable[[float], float], sigma: float, budget: int = POLISH_BUDGET) -> tuple[float, int]:
    """Keep iterating a contraction while its step still shrinks.

    Stops at rounding level, so the computed state depends on the data
    only through the fixed point and not through where the stopping test
    happened to trigger.
    """
    step = math.inf
    for k in range(1, budget + 1):
        nxt = P(sigma)
        d = abs(nxt - sigma)
        if d == 0.0:
            return nxt, k
        if d >= step:
            return sigma, k
        sigma, step = nxt, d
    return sigma, budget


def solve_incremental(
    K: StiffnessMatrix2,
    F,
    w_t: float,
    f: float,
    select: str = SMALLEST,
    tol: float = FIXED_POINT_TOL,
    max_iters: int = MAX_ITERS,
) -> IncrementalSolution:
    """Solve one Coulomb step as a fixed point of the pressure map.

    Below the critical coefficient the map is a contraction and plain
    iteration is used (from 0 for ``select='smallest'``, from the a-priori
    bound for ``select='largest'``; the limit is the same), switching to
    a bracketed root search when the contraction is slow.  Otherwise a
    bracketed scan picks the smallest or largest fixed point: the largest
    one is the solution with the most friction, i.e. the least slip.
    """
    f = check_friction(f)
    Fn, Ft = float(F[0]), float(F[1])
    w_t = float(w_t)
    knn, knt, ktt = K.k_nn, K.coupling, K.k_tt
    scale = max(1.0, abs(Fn), abs(Ft))
    Sigma1 = sigma_upper_bound(K, (Fn, Ft), w_t, f)

    def P(sigma: float) -> float:
        return -f * _tresca(knn, knt, ktt, Fn, Ft, w_t, sigma)[2]

    fcrit = critical_friction(K)
    unique = f < fcrit
    iterations = 0
    if f == 0.0:
        sigma = 0.0
    else:
        converged = False
        if unique:
            sigma = 0.0 if select == SMALLEST else Sigma1
            for iterations in range(1, min(max_iters, ITERATION_BUDGET) + 1):
                nxt = P(sigma)
                if abs(nxt - sigma) <= tol * scale:
                    sigma, converged = nxt, True
                    break
                sigma = nxt
            if converged:
                sigma, extra = _polish(P, sigma)
                iterations += extra
        if not converged:
            # bracketed search; below f_crit the root is unique, so it is
            # the same point plain iteration would reach (only faster when
            # the contraction ratio f k_nt / k_tt is close to one)
            upper = Sigma1
            if Sigma1 > 0.0:
                upper = max(Sigma1, max(P(Sigma1 * k / 16) for k in range(17)))
            sigma, evals = scalar_fixed_point(P, upper, select, tol=1e-12)
            iterations += evals
            if iterations > max_iters:
                raise NonConvergence(f"fixed-point search exceeded {max_iters} evaluations", iterations, sigma)
            if abs(P(sigma) - sigma) > tol * max(1.0, sigma, scale):
                raise NonConvergence("bracketed fixed-point search did not converge", iterations, sigma)
    un, ut, tn, tt = _tresca(knn, knt, ktt, Fn, Ft, w_t, sigma)
    state = ContactState(un, ut, tn, tt)
    return IncrementalSolution(state, classify(state, w_t, scale), iterations, unique, sigma)


# --------------------------------------------------------------------------
# analysis tools


@dataclass(frozen=True)
class ContinuumFamily:
    """One-parameter set of incremental solutions at the critical coefficient."""

    K: StiffnessMatrix2
    f: float
    F: np.ndarray
    t_n_range: tuple[float, float]

    def state(self, t_n: float) -> ContactState:
        lo, hi = self.t_n_range
        if not (lo - 1e-15 * abs(lo) <= t_n <= hi):
            raise ValueError(f"t_n={t_n} outside {self.t_n_range}")
        s = self.K.tsign
        t = np.array([t_n, s * self.f * t_n])
        u = np.linalg.solve(self.K.matrix, self.F + t)
        return ContactState.from_arrays(u, t)

    def sample(self, count: int) -> list[ContactState]:
        lo, hi = self.t_n_range
        return [self.state(x) for x in np.linspace(lo, hi, count)]


def continuum_family(K: StiffnessMatrix2, f: float, F_t: float) -> ContinuumFamily:
    f = check_friction(f)
    fcrit = critical_friction(K)
    if not math.isfinite(fcrit) or abs(f * K.k_nt - K.k_tt) > 1e-12 * K.k_tt:
        raise NotCritical(f"f={f} is not the critical coefficient {fcrit}")
    if not F_t > 0.0:
        raise NonPositiveLoad(f"F_t must be positive, got {F_t}")
    F_n = K.k_nt * F_t / K.k_tt
    F = np.array([F_n, K.tsign * F_t])
    return ContinuumFamily(K, f, F, (-F_n, 0.0))


def lipschitz_probe(K: StiffnessMatrix2, f: float, trials: int = 10_000, seed: int = 0) -> float:
    """Largest observed |u(F1) - u(F2)| / |F1 - F2| over random force pairs.

    Trial ``i`` draws from its own Philox stream keyed by ``(seed, i)``, so
    the result does not depend on evaluation order.  Even trials use
    independent pairs in ``[-1, 1]^2``, odd trials a pair at distance
    ``1e-3`` to capture local slopes.
    """
    f = check_friction(f)
    if not f < critical_friction(K):
        raise SupercriticalFriction(f"f={f} is not below the critical coefficient {critical_friction(K)}")
    best = 0.0
    for i in range(trials):
        rng = np.random.Generator(np.random.Philox(key=[seed, i]))
        w_t = rng.uniform(-1.0, 1.0)
        F1 = rng.uniform(-1.0, 1.0, 2)
        if i % 2:
            F2 = F1 + 1e-3 * rng.standard_normal(2)
        else:
            F2 = rng.uniform(-1.0, 1.0, 2)
        dF = float(np.linalg.norm(F1 - F2))
        if dF == 0.0:
            continue
        u1 = solve_incremental(K, F1, w_t, f).state.u
        u2 = solve_incremental(K, F2, w_t, f).state.u
        best = max(best, float(np.linalg.norm(u1 - u2)) / dF)
    return best
