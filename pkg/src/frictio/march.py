"""Quasi-static time stepping driven by the variation of the load.

Time steps are chosen so that the load travels at most ``v(S)/(m+1)``
in variation per step; each step is one incremental Coulomb solve with
the previous tangential position as reference.  Steps whose increment
is not controlled by the load increment are flagged as jumps and, by
default, localized by bisection on the variation level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .core import (
    PIECEWISE_AFFINE,
    PIECEWISE_CONSTANT,
    ContactState,
    JumpRecord,
    LoadJump,
    LoadPath,
    PathPoint,
    ResidualReport,
    Segment,
    StiffnessMatrix2,
    Trajectory,
    Warp,
    check_friction,
    check_incremental_kkt,
    critical_friction,
)
from .errors import InadmissibleInitialCondition, NonMonotoneReparam, OutOfRange, SubcriticalFriction
from .incremental import LARGEST, solve_incremental

DEFAULT_JUMP_FACTOR = 10.0
ADMISSIBILITY_TOL = 1e-9
# bisection on the variation level stops at this fraction of v(S)
LOCALIZATION_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class Subdivision:
    times: np.ndarray
    m: int
    gains: np.ndarray
    threshold: float
    points: tuple[PathPoint, ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @property
    def values(self) -> np.ndarray:
        """Load at each node (right values)."""
        return np.array([p.value for p in self.points])


def build_subdivision(load: LoadPath, m: int) -> Subdivision:
    """Nodes s_i = sup{ s > s_{i-1} : v(s) <= v(s_{i-1}) + v(S)/(m+1) }."""
    if m < 0:
        raise ValueError("m must be >= 0")
    vS = load.total_variation
    thr = vS / (m + 1)
    pts = [load.start_point()]
    end = load.end_point()
    while pts[-1].time < load.horizon:
        level = pts[-1].v + thr
        if thr == 0.0 or level >= vS * (1.0 - 1e-14):
            nxt = end
        else:
            nxt = load.sup_below(pts[-1], level)
        if nxt.time <= pts[-1].time:
            raise RuntimeError(f"subdivision stalled at s={nxt.time}; threshold below float resolution")
        pts.append(nxt)
    times = np.array([p.time for p in pts])
    gains = np.diff([p.v for p in pts])
    return Subdivision(times, m, gains, thr, tuple(pts))


def interpolant_error(load: LoadPath, sub: Subdivision) -> float:
    """sup_s |F_+(s) - F(s)| for the piecewise-constant right-continuous interpolant.

    On each straight piece the distance to a fixed vector is convex, so the
    supremum over ``[s_i, s_{i+1})`` is attained at piece ends or at the
    left limit in ``s_{i+1}``.  Values are taken from the (segment,
    fraction) representation of the nodes, never re-derived from times.
    """
    worst = 0.0
    segs = load.segments
    for a, b in zip(sub.points, sub.points[1:]):
        held = a.value
        cands = []
        for k in range(a.segment, b.segment + 1):
            seg = segs[k]
            if k > a.segment and (k < b.segment or b.theta > 0.0):
                cands.append(seg.f0)
            if k < b.segment:
                cands.append(seg.f1)
            elif b.theta > 0.0:
                cands.append(seg.at_theta(b.theta))
        for c in cands:
            worst = max(worst, float(np.linalg.norm(c - held)))
    return worst


@dataclass(frozen=True, eq=False)
class MarchReport:
    trajectory: Trajectory
    jumps: tuple[tuple[float, float], ...]
    stability_constant: float
    energy_residuals: np.ndarray
    nonunique_steps: tuple[float, ...]
    loads: np.ndarray
    subdivision: Subdivision = field(repr=False)
    jump_factor: float = DEFAULT_JUMP_FACTOR

    @property
    def max_energy_residual(self) -> float:
        return float(self.energy_residuals.max()) if self.energy_residuals.size else 0.0

    def increments(self) -> tuple[np.ndarray, np.ndarray]:
        """(|du_i|, |dF_i|) for consecutive breakpoints."""
        u = self.trajectory.u_array()
        du = np.linalg.norm(np.diff(u, axis=0), axis=1)
        dF = np.linalg.norm(np.diff(self.loads, axis=0), axis=1)
        return du, dF


def energy_identity_residual(K: StiffnessMatrix2, F, prev: ContactState, cur: ContactState, f: float) -> float:
    du = cur.u - prev.u
    return abs(
        float(cur.u @ K.matrix @ du)
        - float(np.dot(F, du))
        - cur.t_n * du[0]
        - f * cur.t_n * abs(du[1])
    )


def _as_state(K: StiffnessMatrix2, u0, F0) -> ContactState:
    if isinstance(u0, ContactState):
        u = u0.u
    else:
        u = np.asarray(u0, dtype=float)
    t = K.matrix @ u - np.asarray(F0, dtype=float)
    return ContactState.from_arrays(u, t)


@dataclass
class Walk:
    """Result of stepping through a subdivision (states are solver specific)."""

    points: list[PathPoint]
    states: list
    unique: list[bool]
    # (index of the right state, left state) for every detected jump
    jumps: list[tuple[int, object]]


def walk_subdivision(
    load: LoadPath,
    sub: Subdivision,
    start,
    solve: Callable[[PathPoint, object], tuple[object, bool]],
    is_jump: Callable[[PathPoint, object, PathPoint, object], bool],
    localize: bool = True,
) -> Walk:
    """Step through the nodes of ``sub``; detect and optionally localize jumps.

    ``solve(point, base_state)`` returns ``(state, unique)`` for the
    incremental problem at ``point`` with reference ``base_state``.
    When a step is flagged by ``is_jump``, the variation level between the
    two nodes is bisected (every trial solved from the same base state)
    until its width drops below ``LOCALIZATION_RTOL * v(S)``.  The last
    regular point and the jump point become extra breakpoints, and the
    march resumes from the jump point towards the pending node.
    """
    vscale = max(load.total_variation, 1e-300)
    walk = Walk([sub.points[0]], [start], [True], [])

    def push(point: PathPoint, state, unique: bool) -> None:
        walk.points.append(point)
        walk.states.append(state)
        walk.unique.append(unique)

    for target in sub.points[1:]:
        while True:
            base_pt, base = walk.points[-1], walk.states[-1]
            state, unique = solve(target, base)
            if not is_jump(base_pt, base, target, state):
                push(target, state, unique)
                break
            if not localize:
                walk.jumps.append((len(walk.points), base))
                push(target, state, unique)
                break
            lo, lo_sol = base_pt, None
            hi, hi_sol = target, (state, unique)
            for _ in range(400):
                if hi.v - lo.v <= LOCALIZATION_RTOL * vscale:
                    break
                mid = load.sup_below(lo, 0.5 * (lo.v + hi.v))
                if not lo.time < mid.time < hi.time:
                    break
                msol = solve(mid, base)
                if is_jump(base_pt, base, mid, msol[0]):
                    hi, hi_sol = mid, msol
                else:
                    lo, lo_sol = mid, msol
            if lo_sol is not None:
                push(lo, *lo_sol)
                hi_sol = solve(hi, lo_sol[0])
            walk.jumps.append((len(walk.points), walk.states[-1]))
            push(hi, *hi_sol)
            if hi is target:
                break
    return walk


def march(
    K: StiffnessMatrix2,
    load: LoadPath,
    u0,
    f: float,
    m: int,
    *,
    jump_factor: float = DEFAULT_JUMP_FACTOR,
    select: str = LARGEST,
    localize: bool = True,
) -> MarchReport:
    """March the quasi-static problem on the variation-based subdivision.

    ``u0`` is the initial position (vector or ``ContactState``); its
    contact force is recomputed from equilibrium and must be admissible.
    A step is a jump when ``|du| > jump_factor * (|dF| + v(S)/(m+1)) /
    lambda_min(K)``.  With ``localize`` the jump time is pinned down by
    bisection on the variation level and inserted as an extra breakpoint
    (plus the last regular position before it).
    """
    f = check_friction(f)
    F0 = load.value(0.0)
    start = _as_state(K, u0, F0)
    rep = check_incremental_kkt(K, F0, start.u_t, f, start, tol=ADMISSIBILITY_TOL)
    if not rep.passed:
        raise InadmissibleInitialCondition(f"initial state is not admissible: {rep.summary()}")
    sub = build_subdivision(load, m)
    thr = sub.threshold
    lam = K.lambda_min
    def solve(point: PathPoint, base: ContactState):
        sol = solve_incremental(K, point.value, base.u_t, f, select=select)
        return sol.state, sol.unique

    def is_jump(base_pt: PathPoint, base: ContactState, pt: PathPoint, state: ContactState) -> bool:
        dF = float(np.linalg.norm(pt.value - base_pt.value))
        return state.distance(base) > jump_factor * (dF + thr) / lam

    walk = walk_subdivision(load, sub, start, solve, is_jump, localize)
    points, states, unique_flags = walk.points, walk.states, walk.unique
    jumps = [JumpRecord(points[k].time, left, states[k]) for k, left in walk.jumps]
    traj = Trajectory(np.array([p.time for p in points]), tuple(states), tuple(jumps), PIECEWISE_CONSTANT)
    loads = np.array([p.value for p in points])
    jump_times = {j.time for j in jumps}
    energy = np.array(
        [energy_identity_residual(K, loads[i], states[i - 1], states[i], f) for i in range(1, len(states))]
    )
    stab = 0.0
    for i in range(1, len(states)):
        if points[i].time in jump_times:
            continue
        dF = float(np.linalg.norm(loads[i] - loads[i - 1]))
        if dF > 0.0:
            stab = max(stab, states[i].distance(states[i - 1]) / dF)
    nonunique = tuple(points[i].time for i in range(1, len(points)) if not unique_flags[i])
    return MarchReport(
        traj,
        tuple((j.time, j.magnitude) for j in jumps),
        stab,
        energy,
        nonunique,
        loads,
        sub,
        jump_factor,
    )


# --------------------------------------------------------------------------
# the closed-form jumping example


def paper_jump_load(K: StiffnessMatrix2, R: float, f: float) -> LoadPath:
    """Lipschitz load on [0, 2] that forces a jump at s = 1 when f >= k_tt/k_nt."""
    s = K.tsign
    F1 = np.array([R / f, s * R])
    F2 = np.array([R / f + 1.0, s * (R + f + 1.0)])
    return LoadPath([Segment(0.0, 1.0, [0.0, 0.0], F1), Segment(1.0, 2.0, F1, F2)])


def paper_jump_scenario(K: StiffnessMatrix2, R: float, f: float) -> tuple[LoadPath, Trajectory]:
    """Exact load and jumping solution on [0, 2].

    The particle sticks at the origin on [0, 1[ with ``t = -F``; at s = 1
    it jumps to the free equilibrium ``K^{-1} F(1)`` and stays
    contact-free (``t = 0``) afterwards.
    """
    f = check_friction(f)
    if not R > 0.0:
        raise ValueError("R must be positive")
    if K.k_nt == 0.0 or f < critical_friction(K):
        raise SubcriticalFriction(f"need f >= k_tt/k_nt = {critical_friction(K)}, got {f}")
    knn, knt, ktt, det = K.k_nn, K.k_nt, K.k_tt, K.det
    sgn = K.tsign
    u1 = np.array([R * (ktt / f - knt), R * (knn - knt / f)]) / det
    slope = np.array([ktt - knt * (f + 1.0), knn * (f + 1.0) - knt]) / det
    u2 = u1 + slope
    flip = np.array([1.0, sgn])
    zero = ContactState(0.0, 0.0, 0.0, 0.0)
    left = ContactState(0.0, 0.0, -R / f, -sgn * R)
    right = ContactState.from_arrays(u1 * flip, np.zeros(2))
    end = ContactState.from_arrays(u2 * flip, np.zeros(2))
    traj = Trajectory(
        np.array([0.0, 1.0, 2.0]),
        (zero, right, end),
        (JumpRecord(1.0, left, right),),
        PIECEWISE_AFFINE,
    )
    return paper_jump_load(K, R, f), traj


def no_continuation_witness(K: StiffnessMatrix2, R: float, f: float, epsilon: float, tol: float = 1e-12) -> ResidualReport:
    """Residuals of the contact-keeping continuation u = 0 at s = 1 + epsilon.

    Past s = 1 the stuck particle needs a tangential force exceeding the
    friction bound by exactly ``epsilon``; the returned report fails on
    the cone law.
    """
    f = check_friction(f)
    if K.k_nt == 0.0 or f < critical_friction(K):
        raise SubcriticalFriction(f"need f >= k_tt/k_nt = {critical_friction(K)}, got {f}")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    load = paper_jump_load(K, R, f)
    if 1.0 + epsilon > load.horizon:
        raise OutOfRange("epsilon must not exceed 1")
    F = load.value(1.0 + epsilon)
    state = ContactState(0.0, 0.0, -F[0], -F[1])
    return check_incremental_kkt(K, F, 0.0, f, state, tol=tol)


# --------------------------------------------------------------------------
# rate independence


def _check_monotone(phi: Callable[[float], float], S: float, extra=()) -> None:
    grid = np.union1d(np.linspace(0.0, S, 2001), np.asarray(list(extra), dtype=float))
    vals = np.array([phi(float(s)) for s in grid])
    if vals[0] != 0.0:
        raise NonMonotoneReparam(f"reparametrization must map 0 to 0, got {vals[0]}")
    if np.any(np.diff(vals) <= 0.0) or not np.all(np.isfinite(vals)):
        raise NonMonotoneReparam("reparametrization is not strictly increasing")


def reparametrize(load: LoadPath, phi: Callable[[float], float]) -> LoadPath:
    """The load ``tau -> F(phi^{-1}(tau))`` on ``[0, phi(S)]``.

    Segments stay straight in force space; only their time parametrization
    changes, so the variation function is ``v o phi^{-1}``.
    """
    _check_monotone(phi, load.horizon, [s.t0 for s in load.segments])
    segs = []
    for seg in load.segments:
        a, b = seg.t0, seg.t1

        def inverse(tau, a=a, b=b):
            lo, hi = phi(a), phi(b)
            if tau <= lo:
                return a
            if tau >= hi:
                return b
            return brentq(lambda x: phi(x) - tau, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)

        warp = Warp(
            theta=lambda tau, seg=seg, inverse=inverse: seg.theta(inverse(tau)),
            time_at=lambda th, seg=seg: float(phi(seg.time_at(th))),
        )
        segs.append(Segment(phi(a), phi(b), seg.f0, seg.f1, warp))
    jumps = [LoadJump(phi(j.t), j.left, j.right) for j in load.jumps]
    return LoadPath(segs, jumps)


def rate_independence_probe(
    K: StiffnessMatrix2,
    load: LoadPath,
    u0,
    f: float,
    m: int,
    reparam: Callable[[float], float],
    tol: float = 1e-12,
    **march_kwargs,
) -> bool:
    """March the original and the reparametrized load; compare step states."""
    other = reparametrize(load, reparam)
    a = march(K, load, u0, f, m, **march_kwargs).trajectory.states
    b = march(K, other, u0, f, m, **march_kwargs).trajectory.states
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if np.abs(x.u - y.u).max() > tol or np.abs(x.t - y.t).max() > tol * max(1.0, np.abs(x.t).max()):
            return False
    return True


def trajectory_sup_error(traj: Trajectory, exact: Trajectory, window: float = 1e-12) -> float:
    """Largest displacement error of ``traj`` against ``exact`` at the breakpoints of ``traj``.

    Breakpoints closer than ``window`` to a jump of ``exact`` are skipped:
    a localized jump time is only known to that resolution, and on either
    side of it both states are legitimate.
    """
    jt = [j.time for j in exact.jumps]
    worst = 0.0
    for s, st in zip(traj.breakpoints, traj.states):
        if any(abs(s - t) <= window for t in jt):
            continue
        worst = max(worst, float(np.abs(st.u - exact.at(float(s)).u).max()))
    return worst
