"""Domain types, residual checkers and load-path variation calculus.

Coordinates are always (normal, tangential).  The obstacle sits at
``u_n = 0`` and admissible positions satisfy ``u_n <= 0``; the contact
force ``t = K u - F`` has ``t_n <= 0`` when the wall pushes back.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import MismatchedHorizon, OutOfRange

FrictionCoefficient = float

PIECEWISE_CONSTANT = "piecewise-constant-right-continuous"
PIECEWISE_AFFINE = "piecewise-affine"


def check_friction(f: float) -> float:
    f = float(f)
    if not math.isfinite(f) or f < 0.0:
        raise ValueError(f"friction coefficient must be finite and >= 0, got {f}")
    return f


@dataclass(frozen=True)
class StiffnessMatrix2:
    """Symmetric positive-definite 2x2 stiffness in (normal, tangential) order.

    The stored ``k_nt`` is always >= 0.  When constructed with a negative
    coupling the tangential axis is reversed and ``flipped`` is set; the
    matrix seen by callers (``matrix``) keeps the original sign so that
    loads and states can stay in the caller's frame.
    """

    k_nn: float
    k_nt: float
    k_tt: float
    flipped: bool = False

    def __post_init__(self):
        k_nn, k_nt, k_tt = float(self.k_nn), float(self.k_nt), float(self.k_tt)
        if not all(math.isfinite(x) for x in (k_nn, k_nt, k_tt)):
            raise ValueError("stiffness entries must be finite")
        flipped = bool(self.flipped)
        if k_nt < 0.0:
            k_nt = -k_nt
            flipped = not flipped
        if k_nn <= 0.0 or k_tt <= 0.0 or k_nn * k_tt - k_nt * k_nt <= 0.0:
            raise ValueError(
                f"stiffness is not positive definite: k_nn={k_nn}, k_nt={k_nt}, k_tt={k_tt}"
            )
        object.__setattr__(self, "k_nn", k_nn)
        object.__setattr__(self, "k_nt", k_nt)
        object.__setattr__(self, "k_tt", k_tt)
        object.__setattr__(self, "flipped", flipped)

    @classmethod
    def from_matrix(cls, m) -> "StiffnessMatrix2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2) or abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("expected a symmetric 2x2 matrix")
        return cls(m[0, 0], 0.5 * (m[0, 1] + m[1, 0]), m[1, 1])

    @property
    def tsign(self) -> float:
        """+1, or -1 when the tangential axis was reversed."""
        return -1.0 if self.flipped else 1.0

    @property
    def coupling(self) -> float:
        """Off-diagonal entry in the caller's frame."""
        return self.tsign * self.k_nt

    @property
    def matrix(self) -> np.ndarray:
        c = self.coupling
        return np.array([[self.k_nn, c], [c, self.k_tt]])

    @property
    def det(self) -> float:
        return self.k_nn * self.k_tt - self.k_nt * self.k_nt

    @property
    def inf_norm(self) -> float:
        return max(self.k_nn + self.k_nt, self.k_nt + self.k_tt)

    @property
    def lambda_min(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def scaled(self, alpha: float) -> "StiffnessMatrix2":
        return StiffnessMatrix2(alpha * self.k_nn, alpha * self.coupling, alpha * self.k_tt)


def critical_friction(K: StiffnessMatrix2) -> float:
    """Critical friction coefficient k_tt / k_nt; ``math.inf`` when unbounded."""
    if K.k_nt == 0.0:
        return math.inf
    return K.k_tt / K.k_nt


@dataclass(frozen=True)
class ContactState:
    u_n: float
    u_t: float
    t_n: float
    t_t: float

    @classmethod
    def from_arrays(cls, u, t) -> "ContactState":
        return cls(float(u[0]), float(u[1]), float(t[0]), float(t[1]))

    @property
    def u(self) -> np.ndarray:
        return np.array([self.u_n, self.u_t])

    @property
    def t(self) -> np.ndarray:
        return np.array([self.t_n, self.t_t])

    def scaled(self, alpha: float) -> "ContactState":
        return ContactState(alpha * self.u_n, alpha * self.u_t, alpha * self.t_n, alpha * self.t_t)

    def mirrored(self) -> "ContactState":
        """Same state with the tangential axis reversed."""
        return ContactState(self.u_n, -self.u_t, self.t_n, -self.t_t)

    def distance(self, other: "ContactState") -> float:
        return float(np.linalg.norm(self.u - other.u))


# --------------------------------------------------------------------------
# load paths


@dataclass(frozen=True, eq=False)
class Warp:
    """Monotone reparametrization of one straight load segment.

    ``theta(s)`` maps time to the fraction of the segment travelled and
    ``time_at(theta)`` is its inverse.
    """

    theta: Callable[[float], float]
    time_at: Callable[[float], float]


@dataclass(frozen=True, eq=False)
class Segment:
    t0: float
    t1: float
    f0: np.ndarray
    f1: np.ndarray
    warp: Warp | None = None

    def __post_init__(self):
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))
        object.__setattr__(self, "f0", np.array(self.f0, dtype=float))
        object.__setattr__(self, "f1", np.array(self.f1, dtype=float))
        if not self.t1 > self.t0:
            raise ValueError(f"segment must have positive length, got [{self.t0}, {self.t1}]")
        if self.f0.shape != self.f1.shape or self.f0.ndim != 1:
            raise ValueError("segment end values must be vectors of equal length")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.f1 - self.f0))

    def theta(self, s: float) -> float:
        if self.warp is not None:
            return float(self.warp.theta(s))
        return (s - self.t0) / (self.t1 - self.t0)

    def time_at(self, theta: float) -> float:
        if self.warp is not None:
            return float(self.warp.time_at(theta))
        return self.t0 + theta * (self.t1 - self.t0)

    def at_theta(self, theta: float) -> np.ndarray:
        return self.f0 + theta * (self.f1 - self.f0)


@dataclass(frozen=True, eq=False)
class LoadJump:
    t: float
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "left", np.array(self.left, dtype=float))
        object.__setattr__(self, "right", np.array(self.right, dtype=float))

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.right - self.left))


@dataclass(frozen=True)
class PathPoint:
    """A position on a load path located by segment and travelled fraction."""

    time: float
    segment: int
    theta: float
    value: np.ndarray = field(compare=False)
    v: float


class LoadPath:
    """Right-continuous piecewise-affine load with explicit jumps.

    Segments tile ``[0, S]``.  Jumps may only sit on segment boundaries
    (including ``S``); the value at a jump time is the right value.
    """

    _CONTINUITY_RTOL = 1e-12

    def __init__(self, segments: Sequence[Segment], jumps: Iterable[LoadJump] = ()):
        segments = list(segments)
        if not segments:
            raise ValueError("a load path needs at least one segment")
        if segments[0].t0 != 0.0:
            raise ValueError("segments must start at time 0")
        dim = segments[0].f0.shape
        for a, b in zip(segments, segments[1:]):
            if a.t1 != b.t0:
                raise ValueError(f"segments do not tile: {a.t1} != {b.t0}")
        for seg in segments:
            if seg.f0.shape != dim:
                raise ValueError("all segments must share one dimension")
        self.segments = tuple(segments)
        self.horizon = segments[-1].t1
        self.dim = dim[0]
        jumps = sorted(jumps, key=lambda j: j.t)
        scale = max(1.0, max(float(np.abs(np.concatenate([s.f0, s.f1])).max()) for s in segments))
        tol = self._CONTINUITY_RTOL * scale
        ends = {seg.t1: k for k, seg in enumerate(segments)}
        by_time: dict[float, LoadJump] = {}
        for j in jumps:
            if j.t in by_time:
                raise ValueError(f"duplicate jump at t={j.t}")
            if j.t not in ends:
                raise ValueError(f"jump at t={j.t} is not on a segment boundary")
            k = ends[j.t]
            if np.abs(j.left - segments[k].f1).max() > tol:
                raise ValueError(f"jump at t={j.t}: left value does not match the segment")
            if k + 1 < len(segments) and np.abs(j.right - segments[k + 1].f0).max() > tol:
                raise ValueError(f"jump at t={j.t}: right value does not match the next segment")
            by_time[j.t] = j
        for a, b in zip(segments, segments[1:]):
            if a.t1 not in by_time and np.abs(a.f1 - b.f0).max() > tol:
                raise ValueError(f"discontinuity at t={a.t1} without a jump record")
        self.jumps = tuple(by_time[t] for t in sorted(by_time))
        self._jump_at = by_time
        self._t0 = [seg.t0 for seg in segments]
        # v at each segment start, jump at that start included
        starts = []
        acc = 0.0
        for k, seg in enumerate(segments):
            if k > 0 and seg.t0 in by_time:
                acc += by_time[seg.t0].magnitude
            starts.append(acc)
            acc += seg.length
        if self.horizon in by_time:
            acc += by_time[self.horizon].magnitude
        self._vstart = starts
        self._vtotal = acc

    # construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value, horizon: float = 1.0) -> "LoadPath":
        return cls([Segment(0.0, horizon, value, value)])

    @classmethod
    def piecewise_affine(cls, times, values) -> "LoadPath":
        """Continuous path through ``values`` at the strictly increasing ``times``."""
        values = [np.asarray(v, dtype=float) for v in values]
        if len(times) != len(values) or len(times) < 2:
            raise ValueError("need at least two (time, value) knots")
        return cls([Segment(times[k], times[k + 1], values[k], values[k + 1]) for k in range(len(times) - 1)])

    # evaluation -----------------------------------------------------------

    def _segment_index(self, s: float) -> int:
        return max(0, bisect.bisect_right(self._t0, s) - 1)

    def _check_time(self, s: float) -> float:
        s = float(s)
        if not (0.0 <= s <= self.horizon):
            raise OutOfRange(f"time {s} outside [0, {self.horizon}]")
        return s

    def value(self, s: float) -> np.ndarray:
        s = self._check_time(s)
        if s == self.horizon:
            if s in self._jump_at:
                return self._jump_at[s].right.copy()
            return self.segments[-1].f1.copy()
        seg = self.segments[self._segment_index(s)]
        return seg.at_theta(seg.theta(s))

    __call__ = value

    def left_limit(self, s: float) -> np.ndarray:
        s = self._check_time(s)
        if s == 0.0:
            return self.value(0.0)
        k = bisect.bisect_left(self._t0, s) - 1
        seg = self.segments[k]
        if s == seg.t1:
            return seg.f1.copy()
        return seg.at_theta(seg.theta(s))

    def v(self, s: float) -> float:
        """Variation of the load over ``[0, s]``."""
        s = self._check_time(s)
        if s == self.horizon:
            return self._vtotal
        k = self._segment_index(s)
        seg = self.segments[k]
        return self._vstart[k] + seg.length * seg.theta(s)

    @property
    def total_variation(self) -> float:
        return self._vtotal

    def variation(self, s1: float, s2: float) -> float:
        return variation(self, s1, s2)

    # positions used by the subdivision and jump localization -------------

    def start_point(self) -> PathPoint:
        return PathPoint(0.0, 0, 0.0, self.value(0.0), 0.0)

    def end_point(self) -> PathPoint:
        last = len(self.segments) - 1
        return PathPoint(self.horizon, last, 1.0, self.value(self.horizon), self._vtotal)

    def point_at_time(self, s: float) -> PathPoint:
        s = self._check_time(s)
        if s == self.horizon:
            return self.end_point()
        k = self._segment_index(s)
        seg = self.segments[k]
        th = seg.theta(s)
        return PathPoint(s, k, th, seg.at_theta(th), self._vstart[k] + seg.length * th)

    def sup_below(self, start: PathPoint, level: float) -> PathPoint:
        """Latest position ``s >= start`` with ``v(s) <= level``.

        ``level`` must be >= ``start.v``.  When ``level`` reaches the total
        variation the horizon is returned.  A jump of ``v`` across ``level``
        returns the jump time (its right value, as the path is
        right-continuous).
        """
        if level >= self._vtotal:
            return self.end_point()
        for k in range(start.segment, len(self.segments)):
            seg = self.segments[k]
            base = self._vstart[k]
            if k > start.segment and base > level:
                return PathPoint(seg.t0, k, 0.0, seg.f0.copy(), base)
            if base + seg.length > level:
                th = (level - base) / seg.length
                if k == start.segment:
                    th = max(th, start.theta)
                return PathPoint(seg.time_at(th), k, th, seg.at_theta(th), base + seg.length * th)
        # only the jump at the horizon is left above the level
        return self.end_point()

    # transformations ------------------------------------------------------

    def map_values(self, fn: Callable[[np.ndarray], np.ndarray]) -> "LoadPath":
        """Apply a linear map to every value (segments stay straight)."""
        segs = [Segment(s.t0, s.t1, fn(s.f0), fn(s.f1), s.warp) for s in self.segments]
        jumps = [LoadJump(j.t, fn(j.left), fn(j.right)) for j in self.jumps]
        return LoadPath(segs, jumps)


def variation(load: LoadPath, s1: float, s2: float) -> float:
    """Exact variation of ``load`` over ``[s1, s2]`` (right-continuous convention)."""
    if not (0.0 <= s1 <= s2 <= load.horizon):
        raise OutOfRange(f"need 0 <= s1 <= s2 <= {load.horizon}, got [{s1}, {s2}]")
    if s1 == s2:
        return 0.0
    return max(0.0, load.v(s2) - load.v(s1))


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class JumpRecord:
    time: float
    left: ContactState
    right: ContactState

    @property
    def magnitude(self) -> float:
        return self.right.distance(self.left)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Right-continuous state history on explicit breakpoints."""

    breakpoints: np.ndarray
    states: tuple[ContactState, ...]
    jumps: tuple[JumpRecord, ...] = ()
    interpolation: str = PIECEWISE_CONSTANT
    jump_tol: float = 1e-14

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "jumps", tuple(sorted(self.jumps, key=lambda j: j.time)))
        if self.interpolation not in (PIECEWISE_CONSTANT, PIECEWISE_AFFINE):
            raise ValueError(f"unknown interpolation rule {self.interpolation!r}")
        if bp.ndim != 1 or bp.size < 1 or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.states) != bp.size:
            raise ValueError("one state per breakpoint is required")
        times = set(bp.tolist())
        for j in self.jumps:
            if j.time not in times:
                raise ValueError(f"jump record at {j.time} is not a breakpoint")
            if j.magnitude <= self.jump_tol and abs(j.left.t_n - j.right.t_n) + abs(j.left.t_t - j.right.t_t) <= self.jump_tol:
                raise ValueError(f"jump record at {j.time} has equal left and right states")

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    def jump_at(self, s: float) -> JumpRecord | None:
        for j in self.jumps:
            if j.time == s:
                return j
        return None

    def index(self, s: float) -> int:
        if not (0.0 <= s <= self.horizon):
            raise OutOfRange(f"time {s} outside [0, {self.horizon}]")
        return int(np.searchsorted(self.breakpoints, s, side="right") - 1)

    def _left_state(self, k: int) -> ContactState:
        """Left limit at breakpoint ``k`` (k >= 1)."""
        j = self.jump_at(float(self.breakpoints[k]))
        if self.interpolation == PIECEWISE_CONSTANT:
            return self.states[k - 1]
        return j.left if j is not None else self.states[k]

    def at(self, s: float) -> ContactState:
        k = self.index(s)
        if self.interpolation == PIECEWISE_CONSTANT or k == len(self.states) - 1:
            return self.states[k]
        s0, s1 = self.breakpoints[k], self.breakpoints[k + 1]
        a, b = self.states[k], self._left_state(k + 1)
        lam = (s - s0) / (s1 - s0)
        return ContactState.from_arrays(a.u + lam * (b.u - a.u), a.t + lam * (b.t - a.t))

    def left_limit(self, s: float) -> ContactState:
        k = self.index(s)
        if s == self.breakpoints[k] and k > 0:
            return self._left_state(k)
        return self.at(s)

    def u_array(self) -> np.ndarray:
        return np.array([st.u for st in self.states])


# --------------------------------------------------------------------------
# residual checks


LAWS = ("equilibrium", "signorini", "cone", "flow")


@dataclass(frozen=True)
class ResidualReport:
    """Raw residuals in force units; a law passes when residual <= tol * scale.

    The flow-rule residual ``|t_t d - f t_n |d||`` is divided by
    ``max(1, |d|)`` for the slip increment ``d`` so it shares force units.
    """

    equilibrium: float
    signorini: float
    cone: float
    flow: float
    scale: float
    tol: float
    worst: dict = field(default_factory=dict, compare=False)

    def ok(self, law: str) -> bool:
        return getattr(self, law) <= self.tol * self.scale

    @property
    def equilibrium_ok(self) -> bool:
        return self.ok("equilibrium")

    @property
    def signorini_ok(self) -> bool:
        return self.ok("signorini")

    @property
    def cone_ok(self) -> bool:
        return self.ok("cone")

    @property
    def flow_ok(self) -> bool:
        return self.ok("flow")

    @property
    def passed(self) -> bool:
        return all(self.ok(law) for law in LAWS)

    @property
    def max_normalized(self) -> float:
        return max(getattr(self, law) for law in LAWS) / self.scale

    def failing(self) -> list[str]:
        return [law for law in LAWS if not self.ok(law)]

    def with_tol(self, tol: float) -> "ResidualReport":
        return ResidualReport(self.equilibrium, self.signorini, self.cone, self.flow, self.scale, tol, dict(self.worst))

    def summary(self) -> str:
        parts = [f"{law}={getattr(self, law) / self.scale:.3e}" for law in LAWS]
        status = "pass" if self.passed else "FAIL(" + ",".join(self.failing()) + ")"
        return f"{status} " + " ".join(parts)


def _signorini(u_n: float, t_n: float, k: float) -> float:
    return max(max(u_n, 0.0) * k, max(t_n, 0.0), min(abs(u_n) * k, abs(t_n)))


def _flow(t_n: float, t_t: float, d: float, f: float) -> float:
    return abs(t_t * d - f * t_n * abs(d)) / max(1.0, abs(d))


class _Accumulator:
    def __init__(self):
        self.values = dict.fromkeys(LAWS, 0.0)
        self.worst: dict = {}

    def add(self, law: str, value: float, where) -> None:
        if value > self.values[law]:
            self.values[law] = value
            self.worst[law] = where

    def report(self, scale: float, tol: float) -> ResidualReport:
        v = self.values
        return ResidualReport(v["equilibrium"], v["signorini"], v["cone"], v["flow"], scale, tol, self.worst)


def _pointwise(acc: _Accumulator, K: np.ndarray, knorm: float, F, st: ContactState, f: float, where) -> None:
    u, t = st.u, st.t
    acc.add("equilibrium", float(np.abs(K @ u - F - t).max()), where)
    acc.add("signorini", _signorini(st.u_n, st.t_n, knorm), where)
    acc.add("cone", max(0.0, abs(st.t_t) + f * st.t_n), where)


def check_incremental_kkt(
    K: StiffnessMatrix2, F, w_t: float, f: float, state: ContactState, tol: float = 1e-10
) -> ResidualReport:
    """Residuals of the incremental Coulomb problem for one candidate state."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    f = check_friction(f)
    F = np.asarray(F, dtype=float)
    scale = max(1.0, float(np.abs(F).max()), K.inf_norm)
    acc = _Accumulator()
    _pointwise(acc, K.matrix, K.inf_norm, F, state, f, None)
    acc.add("flow", _flow(state.t_n, state.t_t, state.u_t - w_t, f), None)
    return acc.report(scale, tol)


def check_quasistatic(
    traj: Trajectory, load: LoadPath, K: StiffnessMatrix2, f: float, tol: float = 1e-9
) -> ResidualReport:
    """Check a trajectory against the discrete quasi-static laws.

    Piecewise-constant trajectories are checked at their breakpoints
    against the load sampled there (the piecewise-constant interpolant of
    the load on the same breakpoints); every increment, jumps included, is
    paired with its end-of-increment traction.  Piecewise-affine
    trajectories are also checked at left limits and segment midpoints,
    which is enough because every law is at most quadratic in time on an
    affine piece.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if abs(traj.horizon - load.horizon) > 1e-12 * max(1.0, load.horizon):
        raise MismatchedHorizon(f"trajectory horizon {traj.horizon} != load horizon {load.horizon}")
    f = check_friction(f)
    Km, kn = K.matrix, K.inf_norm
    bp = traj.breakpoints
    fmax = max(float(np.abs(load.value(min(s, load.horizon))).max()) for s in bp)
    scale = max(1.0, fmax, kn)
    acc = _Accumulator()
    clamp = lambda s: min(float(s), load.horizon)  # noqa: E731

    for k, s in enumerate(bp):
        _pointwise(acc, Km, kn, load.value(clamp(s)), traj.states[k], f, float(s))

    if traj.interpolation == PIECEWISE_CONSTANT:
        for k in range(1, len(bp)):
            a, b = traj.states[k - 1], traj.states[k]
            acc.add("flow", _flow(b.t_n, b.t_t, b.u_t - a.u_t, f), float(bp[k]))
        for j in traj.jumps:
            k = traj.index(j.time)
            prev = traj.states[k - 1] if k > 0 else j.left
            acc.add("equilibrium", float(np.abs(j.left.u - prev.u).max()) * kn, j.time)
            acc.add("flow", _flow(j.right.t_n, j.right.t_t, j.right.u_t - j.left.u_t, f), j.time)
        return acc.report(scale, tol)

    for k in range(len(bp) - 1):
        s0, s1 = float(bp[k]), float(bp[k + 1])
        a = traj.states[k]
        b = traj._left_state(k + 1)
        d = b.u_t - a.u_t
        mid = ContactState.from_arrays(0.5 * (a.u + b.u), 0.5 * (a.t + b.t))
        smid = 0.5 * (s0 + s1)
        _pointwise(acc, Km, kn, load.left_limit(clamp(s1)), b, f, s1)
        _pointwise(acc, Km, kn, load.value(clamp(smid)), mid, f, smid)
        for st, where in ((a, s0), (b, s1)):
            acc.add("flow", _flow(st.t_n, st.t_t, d, f), where)
    for j in traj.jumps:
        acc.add("flow", _flow(j.right.t_n, j.right.t_t, j.right.u_t - j.left.u_t, f), j.time)
    return acc.report(scale, tol)
