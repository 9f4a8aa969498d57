"""Independent brute-force references used by the test suite.

Nothing here is fast or clever on purpose: each routine reaches its
answer by a different road than the solver it checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateTriangle, InfeasibleGrid


@dataclass(frozen=True)
class GridSpec:
    center: tuple[float, ...]
    half_width: tuple[float, ...]
    points: int = 41
    levels: int = 5
    shrink: float = 10.0

    def __post_init__(self):
        if len(self.center) != len(self.half_width):
            raise ValueError("center and half_width must have equal length")
        if self.points < 3 or self.points % 2 == 0:
            raise ValueError("points per axis must be odd and >= 3")
        if any(h <= 0 for h in self.half_width):
            raise ValueError("half widths must be positive")


def brute_minimize(
    objective: Callable[[np.ndarray], np.ndarray],
    upper: Sequence[float | None],
    grid: GridSpec,
) -> np.ndarray:
    """Minimize a convex objective by nested grid search.

    ``objective`` takes an ``(N, d)`` array of points and returns ``N``
    values.  Grid coordinates above an upper bound are clipped onto it, so
    the bound is always sampled and no infeasible point is ever returned.
    Each level recenters on the best point and shrinks the box; a final
    pattern search polishes the result.  Its directions are spread over
    every coordinate plane (16 per plane), so narrow diagonal valleys of
    ill-conditioned quadratics do not stall it.
    """
    center = np.array(grid.center, dtype=float)
    half = np.array(grid.half_width, dtype=float)
    ub = np.array([np.inf if b is None else b for b in upper], dtype=float)
    center = np.minimum(center, ub)
    d = center.size
    best, best_val = None, np.inf
    for _ in range(grid.levels):
        axes = [np.minimum(np.linspace(c - h, c + h, grid.points), b) for c, h, b in zip(center, half, ub)]
        pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        vals = objective(pts)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best, best_val = pts[k].copy(), float(vals[k])
        center = best
        half = half / grid.shrink
    if best is None:
        raise InfeasibleGrid("no feasible grid point")
    step = half.copy()
    dirs = _pattern_directions(d)
    for _ in range(2000):
        trial = np.minimum(best + dirs * step, ub)
        vals = objective(trial)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best, best_val = trial[k].copy(), float(vals[k])
        else:
            step = step * 0.5
            if step.max() < 1e-15 * max(1.0, np.abs(best).max()):
                break
    return best


def _pattern_directions(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    ang = np.arange(16) * (np.pi / 8)
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            v = np.zeros((16, d))
            v[:, i], v[:, j] = np.cos(ang), np.sin(ang)
            out.append(v)
    return np.concatenate(out)


def tresca_objective_batch(K: np.ndarray, F, w_t: float, sigma: float) -> Callable[[np.ndarray], np.ndarray]:
    K = np.asarray(K, dtype=float)
    F = np.asarray(F, dtype=float)

    def obj(v):
        quad = 0.5 * np.einsum("ni,ij,nj->n", v, K, v)
        return quad - v @ F + sigma * np.abs(v[:, 1] - w_t)

    return obj


def tresca_brute(K: np.ndarray, F, w_t: float, sigma: float, grid: GridSpec | None = None) -> np.ndarray:
    """Grid oracle for the Tresca step on {v_n <= 0}."""
    K = np.asarray(K, dtype=float)
    if grid is None:
        lam = float(np.linalg.eigvalsh(K)[0])
        reach = (np.linalg.norm(F) + sigma + np.abs(K).max() * abs(w_t)) / lam + abs(w_t) + 1.0
        grid = GridSpec((0.0, w_t), (reach, reach))
    return brute_minimize(tresca_objective_batch(K, F, w_t, sigma), (0.0, None), grid)


def scalar_contact(k: float, F: float, upper: float = 0.0) -> float:
    """argmin 1/2 k u^2 - F u over u <= upper."""
    return min(F / k, upper)


def scalar_tresca(k: float, F: float, w: float, sigma: float) -> float:
    """argmin 1/2 k u^2 - F u + sigma |u - w|."""
    r = F - k * w
    if abs(r) <= sigma:
        return w
    return (F - math.copysign(sigma, r)) / k


def projected_gradient_qp(K, F, upper, tol: float = 1e-13, max_iter: int = 2_000_000) -> np.ndarray:
    """min 1/2 x.Kx - F.x subject to x <= upper (entries may be +inf).

    Plain projected gradient with step 1/L; slow but hard to get wrong.
    """
    K = np.asarray(K, dtype=float)
    F = np.asarray(F, dtype=float)
    ub = np.asarray(upper, dtype=float)
    L = float(np.linalg.eigvalsh(K)[-1])
    x = np.minimum(np.zeros_like(F), ub)
    for _ in range(max_iter):
        x_new = np.minimum(x - (K @ x - F) / L, ub)
        if np.abs(x_new - x).max() <= tol * max(1.0, np.abs(x_new).max()):
            return x_new
        x = x_new
    return x


def coulomb_enumerate(K: np.ndarray, F, w_t: float, f: float, eps: float = 1e-12) -> list[tuple[np.ndarray, np.ndarray, str]]:
    """All regime-consistent solutions of the 2-DOF Coulomb step.

    Each regime (separated, stick, slip in either direction) fixes enough
    equalities to make the step a linear system; a candidate is kept when
    it satisfies the regime's inequalities.  Degenerate slip regimes
    (infinitely many solutions) are reported by their two extreme members
    with tag ``'slip±-family'``.
    """
    K = np.asarray(K, dtype=float)
    F = np.asarray(F, dtype=float)
    knt, ktt = K[0, 1], K[1, 1]
    scale = max(1.0, np.abs(F).max(), np.abs(K).max() * (1.0 + abs(w_t)))
    tol = eps * scale
    out = []
    u = np.linalg.solve(K, F)
    if u[0] <= tol:
        out.append((u, np.zeros(2), "separated"))
    u = np.array([0.0, w_t])
    t = K @ u - F
    if t[0] <= tol and abs(t[1]) <= -f * t[0] + tol:
        out.append((u, t, "stick"))
    for d in (1.0, -1.0):
        # u_n = 0, t_t = -d f |t_n| = d f t_n, t_n = knt u_t - Fn, t_t = ktt u_t - Ft
        a = ktt - d * f * knt
        b = F[1] - d * f * F[0]
        tag = "slip+" if d > 0 else "slip-"
        if abs(a) > tol:
            ut = b / a
            u = np.array([0.0, ut])
            t = K @ u - F
            if t[0] <= tol and d * (ut - w_t) >= -tol:
                out.append((u, t, tag))
        elif abs(b) <= tol:
            # whole line solves the equalities; keep the admissible interval ends
            lo = w_t if d > 0 else -np.inf
            hi = np.inf if d > 0 else w_t
            if knt > 0:
                hi = min(hi, F[0] / knt)
            elif knt < 0:
                lo = max(lo, F[0] / knt)
            for ut in (lo, hi):
                if np.isfinite(ut):
                    u = np.array([0.0, ut])
                    out.append((u, K @ u - F, tag + "-family"))
    return out


def quadrature_energy(A, B, C, E: float, nu: float, field, plane: str = "strain") -> float:
    """Elastic energy of a linear displacement field on triangle ABC.

    ``field`` is either a callable ``(x, y) -> (u_x, u_y)`` or the vertex-A
    displacement, in which case the field is the interpolation between
    ``u^A`` and clamped vertices B and C written out in closed form.
    The strain is taken by central differences over the triangle's own
    size (exact for linear fields), the integral by the 3-point rule.
    """
    A, B, C = (np.asarray(p, dtype=float) for p in (A, B, C))
    area = 0.5 * abs((B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]))
    if area <= 1e-14 * max(1.0, np.abs(np.stack([A, B, C])).max() ** 2):
        raise DegenerateTriangle("triangle has zero area")
    if not callable(field):
        field = vertex_a_field(A, B, C, field)
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    if plane == "stress":
        lam = 2 * lam * mu / (lam + 2 * mu)
    h = max(np.ptp([A[0], B[0], C[0]]), np.ptp([A[1], B[1], C[1]]))
    bary = [(2 / 3, 1 / 6, 1 / 6), (1 / 6, 2 / 3, 1 / 6), (1 / 6, 1 / 6, 2 / 3)]
    terms = []
    for wa, wb, wc in bary:
        p = wa * A + wb * B + wc * C
        dx = (np.asarray(field(p[0] + h, p[1])) - np.asarray(field(p[0] - h, p[1]))) / (2 * h)
        dy = (np.asarray(field(p[0], p[1] + h)) - np.asarray(field(p[0], p[1] - h))) / (2 * h)
        exx, eyy = dx[0], dy[1]
        exy = 0.5 * (dy[0] + dx[1])
        tr = exx + eyy
        density = 0.5 * (lam * tr * tr + 2 * mu * (exx * exx + eyy * eyy + 2 * exy * exy))
        terms.append(density * area / 3)
    return math.fsum(terms)


def vertex_a_field(A, B, C, uA):
    """Linear field equal to ``uA`` at A and vanishing at B and C.

    Written in the explicit form that needs ``x_A != x_B`` and
    ``y_C != y_B``; otherwise falls back to area coordinates.
    """
    (xa, ya), (xb, yb), (xc, yc) = A, B, C
    uA = np.asarray(uA, dtype=float)
    if xa != xb and yc != yb:
        rx = (xc - xb) / (xa - xb)
        norm = 1.0 - rx * (ya - yb) / (yc - yb)
        if abs(norm) > 1e-14:
            return lambda x, y: ((x - xb) / (xa - xb) - rx * (y - yb) / (yc - yb)) / norm * uA

    def by_area(x, y):
        num = (xb - x) * (yc - y) - (xc - x) * (yb - y)
        den = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya)
        return num / den * uA

    return by_area


def nodal_field(A, B, C, uA, uB, uC):
    """Linear field interpolating three vertex displacements (area coordinates)."""
    fa = vertex_a_field(A, B, C, uA)
    fb = vertex_a_field(B, C, A, uB)
    fc = vertex_a_field(C, A, B, uC)
    return lambda x, y: fa(x, y) + fb(x, y) + fc(x, y)


def edge_quadrature(P, Q, T, order: int = 5) -> np.ndarray:
    """Work-consistent nodal force at P from traction T on edge PQ (Gauss-Legendre)."""
    P, Q, T = (np.asarray(v, dtype=float) for v in (P, Q, T))
    L = float(np.linalg.norm(Q - P))
    xs, ws = np.polynomial.legendre.leggauss(order)
    xi = 0.5 * (xs + 1.0)
    phi = 1.0 - xi
    return 0.5 * L * float(np.dot(ws, phi)) * T
