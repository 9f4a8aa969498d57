"""Plane linear elasticity with P1 triangles and nodal Coulomb contact.

The contact problem is condensed onto the contact nodes: interior and
loaded degrees of freedom are eliminated with a Schur complement, and the
remaining unknowns are rotated into each node's (normal, tangential)
frame.  With a single contact node this is exactly the two-degree-of-
freedom problem handled by :mod:`frictio.incremental`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import (
    PIECEWISE_CONSTANT,
    ContactState,
    JumpRecord,
    LoadPath,
    PathPoint,
    ResidualReport,
    StiffnessMatrix2,
    Trajectory,
    check_friction,
    check_incremental_kkt,
)
from .errors import DegenerateTriangle, InadmissibleInitialCondition, NonConvergence, SingularSystem
from .incremental import LARGEST, _tresca, solve_incremental
from .march import DEFAULT_JUMP_FACTOR, Subdivision, build_subdivision, walk_subdivision

VIRTUAL_WORK = "virtual-work"
PAPER_FORMULA = "paper-formula"
LOAD_MODES = (VIRTUAL_WORK, PAPER_FORMULA)

INNER_TOL = 1e-13
INNER_MAX_SWEEPS = 100_000
OUTER_TOL = 1e-10
OUTER_MAX_ITERS = 10_000
DAMPING_AFTER = 100
DAMPING = 0.5
NODE_KKT_TOL = 1e-8


@dataclass(frozen=True)
class ElasticMaterial:
    E: float
    nu: float = 0.0
    plane: str = "strain"

    def __post_init__(self):
        if not self.E > 0.0:
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {self.nu}")
        if self.plane not in ("strain", "stress"):
            raise ValueError(f"plane must be 'strain' or 'stress', got {self.plane!r}")

    @property
    def lame(self) -> tuple[float, float]:
        lam = self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))
        mu = self.E / (2 * (1 + self.nu))
        if self.plane == "stress":
            lam = 2 * lam * mu / (lam + 2 * mu)
        return lam, mu

    @property
    def D(self) -> np.ndarray:
        """Constitutive matrix acting on (e_xx, e_yy, 2 e_xy)."""
        lam, mu = self.lame
        return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])


@dataclass(frozen=True)
class ContactNode:
    node: int
    gap: float
    normal: tuple[float, float]

    @property
    def n(self) -> np.ndarray:
        v = np.asarray(self.normal, dtype=float)
        return v / np.linalg.norm(v)

    @property
    def tau(self) -> np.ndarray:
        n = self.n
        return np.array([n[1], -n[0]])


@dataclass(frozen=True, eq=False)
class PlaneMesh:
    """Triangulated body with clamped nodes, loaded edges and contact nodes.

    Boundary edges that are not loaded are traction free.  Contact normals
    are taken as given (normalized) rather than derived from geometry.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    gamma_u: tuple[int, ...]
    gamma_t_edges: tuple[tuple[int, int], ...] = ()
    gamma_c: tuple[ContactNode, ...] = ()

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        tris = np.asarray(self.triangles, dtype=int).reshape(-1, 3)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "gamma_u", tuple(sorted({int(i) for i in self.gamma_u})))
        object.__setattr__(self, "gamma_t_edges", tuple((int(a), int(b)) for a, b in self.gamma_t_edges))
        object.__setattr__(
            self,
            "gamma_c",
            tuple(c if isinstance(c, ContactNode) else ContactNode(int(c[0]), float(c[1]), tuple(c[2])) for c in self.gamma_c),
        )
        N = len(nodes)
        if tris.size == 0:
            raise ValueError("mesh has no triangles")
        if tris.min() < 0 or tris.max() >= N:
            raise ValueError("triangle refers to a missing node")
        for k, (i, j, l) in enumerate(tris):
            a2 = _twice_signed_area(nodes[i], nodes[j], nodes[l])
            scale = max(1.0, float(np.abs(nodes[[i, j, l]]).max())) ** 2
            if abs(a2) <= 1e-14 * scale:
                raise DegenerateTriangle(f"triangle {k} has zero area")
            if a2 < 0.0:
                raise DegenerateTriangle(f"triangle {k} is negatively oriented")
        if not self.gamma_u:
            raise ValueError("at least one clamped node is required")
        if any(not 0 <= i < N for i in self.gamma_u):
            raise ValueError("clamped node index out of range")
        boundary = self.boundary_edges()
        for e in self.gamma_t_edges:
            if frozenset(e) not in boundary:
                raise ValueError(f"loaded edge {e} is not a boundary edge")
        bnodes = {i for e in boundary for i in e}
        seen = set()
        for c in self.gamma_c:
            if c.node in seen:
                raise ValueError(f"contact node {c.node} listed twice")
            seen.add(c.node)
            if c.node not in bnodes:
                raise ValueError(f"contact node {c.node} is not on the boundary")
            if c.node in self.gamma_u:
                raise ValueError(f"contact node {c.node} is also clamped")
            if not np.linalg.norm(c.normal) > 0.0:
                raise ValueError(f"contact node {c.node} has a zero normal")

    def boundary_edges(self) -> set[frozenset]:
        count: dict[frozenset, int] = {}
        for i, j, l in self.triangles:
            for e in ((i, j), (j, l), (l, i)):
                key = frozenset((int(e[0]), int(e[1])))
                count[key] = count.get(key, 0) + 1
        return {e for e, c in count.items() if c == 1}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def free_dofs(self) -> np.ndarray:
        fixed = set(self.gamma_u)
        return np.array([2 * i + k for i in range(self.n_nodes) if i not in fixed for k in (0, 1)], dtype=int)


def _twice_signed_area(A, B, C) -> float:
    return float((B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]))


def element_B(A, B, C) -> tuple[np.ndarray, float]:
    """Strain-displacement matrix (3x6, engineering shear) and area."""
    (x1, y1), (x2, y2), (x3, y3) = A, B, C
    a2 = _twice_signed_area(A, B, C)
    scale = max(1.0, float(np.abs(np.array([A, B, C], dtype=float)).max())) ** 2
    if abs(a2) <= 1e-14 * scale:
        raise DegenerateTriangle("triangle has zero area")
    b = np.array([y2 - y3, y3 - y1, y1 - y2]) / a2
    c = np.array([x3 - x2, x1 - x3, x2 - x1]) / a2
    Bm = np.zeros((3, 6))
    Bm[0, 0::2] = b
    Bm[1, 1::2] = c
    Bm[2, 0::2] = c
    Bm[2, 1::2] = b
    return Bm, 0.5 * abs(a2)


def element_stiffness(A, B, C, mat: ElasticMaterial) -> np.ndarray:
    Bm, area = element_B(np.asarray(A, float), np.asarray(B, float), np.asarray(C, float))
    return area * Bm.T @ mat.D @ Bm


def triangle_condensed_stiffness(A, B, C, mat: ElasticMaterial) -> StiffnessMatrix2:
    """Stiffness seen by vertex A when B and C are clamped, in (n, t) = (y, x).

    Either vertex orientation is accepted.
    """
    Ke = element_stiffness(A, B, C, mat)
    kxx, kxy, kyy = Ke[0, 0], Ke[0, 1], Ke[1, 1]
    return StiffnessMatrix2(kyy, kxy, kxx)


def consistent_edge_load(A, C, T, mode: str = VIRTUAL_WORK) -> np.ndarray:
    """Nodal force at A from a uniform traction ``T`` on edge AC.

    ``virtual-work`` integrates the linear shape function of A along the
    edge, giving ``|AC|/2 * T``.  ``paper-formula`` returns
    ``|AC|^2/2 * T``, kept only for comparison with that printed variant.
    """
    L = float(np.linalg.norm(np.asarray(C, float) - np.asarray(A, float)))
    T = np.asarray(T, dtype=float)
    if mode == VIRTUAL_WORK:
        return 0.5 * L * T
    if mode == PAPER_FORMULA:
        return 0.5 * L * L * T
    raise ValueError(f"unknown load mode {mode!r}")


def assemble_full(mesh: PlaneMesh, mat: ElasticMaterial) -> np.ndarray:
    """Global stiffness over all 2N degrees of freedom (x, y per node)."""
    N = mesh.n_nodes
    K = np.zeros((2 * N, 2 * N))
    for tri in mesh.triangles:
        Ke = element_stiffness(*mesh.nodes[tri], mat)
        dofs = np.ravel(np.column_stack([2 * tri, 2 * tri + 1]))
        K[np.ix_(dofs, dofs)] += Ke
    return K


def assemble(mesh: PlaneMesh, mat: ElasticMaterial) -> np.ndarray:
    """Global stiffness restricted to the free degrees of freedom.

    Raises ``SingularSystem`` if the clamped set leaves a rigid mode.
    """
    free = mesh.free_dofs
    K = assemble_full(mesh, mat)[np.ix_(free, free)]
    _check_spd(K)
    return K


def _check_spd(K: np.ndarray) -> None:
    if K.size == 0:
        return
    try:
        np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("stiffness is not positive definite; clamped nodes leave a rigid motion") from exc
    ev = np.linalg.eigvalsh(K)
    if ev[0] <= 1e-12 * ev[-1]:
        raise SingularSystem(f"stiffness is numerically singular (condition {ev[-1] / ev[0]:.3e})")


def load_vector(mesh: PlaneMesh, traction=(0.0, 0.0), body=(0.0, 0.0), mode: str = VIRTUAL_WORK) -> np.ndarray:
    """Global force vector (2N) from a uniform edge traction and body force."""
    F = np.zeros(2 * mesh.n_nodes)
    T = np.asarray(traction, dtype=float)
    for a, c in mesh.gamma_t_edges:
        P, Q = mesh.nodes[a], mesh.nodes[c]
        F[2 * a : 2 * a + 2] += consistent_edge_load(P, Q, T, mode)
        F[2 * c : 2 * c + 2] += consistent_edge_load(Q, P, T, mode)
    b = np.asarray(body, dtype=float)
    if np.any(b):
        for tri in mesh.triangles:
            _, area = element_B(*mesh.nodes[tri])
            for i in tri:
                F[2 * i : 2 * i + 2] += area / 3.0 * b
    return F


def solve_elastic(mesh: PlaneMesh, mat: ElasticMaterial, F, prescribed: dict[int, tuple[float, float]] | None = None) -> np.ndarray:
    """Linear elastic solve; clamped nodes take ``prescribed`` values (default 0)."""
    K = assemble_full(mesh, mat)
    u = np.zeros(2 * mesh.n_nodes)
    for i, val in (prescribed or {}).items():
        if i not in mesh.gamma_u:
            raise ValueError(f"node {i} is not clamped")
        u[2 * i : 2 * i + 2] = val
    free = mesh.free_dofs
    fixed = np.setdiff1d(np.arange(2 * mesh.n_nodes), free)
    Kff = K[np.ix_(free, free)]
    _check_spd(Kff)
    rhs = np.asarray(F, dtype=float)[free] - K[np.ix_(free, fixed)] @ u[fixed]
    u[free] = np.linalg.solve(Kff, rhs)
    return u.reshape(-1, 2)


def element_stresses(mesh: PlaneMesh, mat: ElasticMaterial, u) -> np.ndarray:
    """(sigma_xx, sigma_yy, sigma_xy) per triangle."""
    u = np.asarray(u, dtype=float).reshape(-1)
    out = []
    for tri in mesh.triangles:
        Bm, _ = element_B(*mesh.nodes[tri])
        dofs = np.ravel(np.column_stack([2 * tri, 2 * tri + 1]))
        out.append(mat.D @ Bm @ u[dofs])
    return np.array(out)


# --------------------------------------------------------------------------
# contact condensation


@dataclass(frozen=True, eq=False)
class FemSolution:
    u: np.ndarray  # (N, 2) nodal displacements
    local: tuple[ContactState, ...]  # per contact node, normal position shifted by the gap
    sigma: np.ndarray
    iterations: int
    unique: bool
    reports: tuple[ResidualReport, ...] = field(repr=False, default=())

    @property
    def contact_vector(self) -> np.ndarray:
        return np.concatenate([s.u for s in self.local]) if self.local else np.zeros(0)

    @property
    def active(self) -> np.ndarray:
        """Contact nodes with a compressive reaction."""
        return np.array([s.t_n < 0.0 for s in self.local], dtype=bool)


class CondensedContact:
    """Contact-node reduction of a mesh.

    Local unknowns are ``(u.n - g, u.tau)`` per contact node, so the
    obstacle is at zero and the two-degree-of-freedom conventions apply.
    """

    def __init__(self, mesh: PlaneMesh, mat: ElasticMaterial):
        self.mesh = mesh
        self.mat = mat
        K = assemble_full(mesh, mat)
        free = mesh.free_dofs
        _check_spd(K[np.ix_(free, free)])
        cdofs = np.array([2 * c.node + k for c in mesh.gamma_c for k in (0, 1)], dtype=int)
        odofs = np.setdiff1d(free, cdofs)
        self.free, self.cdofs, self.odofs = free, cdofs, odofs
        Kcc = K[np.ix_(cdofs, cdofs)]
        Kco = K[np.ix_(cdofs, odofs)]
        if odofs.size:
            self._Koo = cho_factor(K[np.ix_(odofs, odofs)])
            self._Koc = K[np.ix_(odofs, cdofs)]
            S = Kcc - Kco @ cho_solve(self._Koo, self._Koc)
            self._G = cho_solve(self._Koo, Kco.T).T  # Kco Koo^-1
        else:
            self._Koo = None
            self._Koc = np.zeros((0, cdofs.size))
            S = Kcc
            self._G = np.zeros((cdofs.size, 0))
        nc = len(mesh.gamma_c)
        Q = np.zeros((2 * nc, 2 * nc))
        for j, c in enumerate(mesh.gamma_c):
            Q[2 * j, 2 * j : 2 * j + 2] = c.n
            Q[2 * j + 1, 2 * j : 2 * j + 2] = c.tau
        self.Q = Q
        Kl = Q @ S @ Q.T
        self.K_local = 0.5 * (Kl + Kl.T)
        self.gap = np.array([c.gap for c in mesh.gamma_c])
        self._shift = np.zeros(2 * nc)
        self._shift[0::2] = self.gap
        self.lambda_min = float(np.linalg.eigvalsh(self.K_local)[0]) if nc else 1.0

    @property
    def n_contact(self) -> int:
        return len(self.mesh.gamma_c)

    def node_stiffness(self, j: int) -> StiffnessMatrix2:
        b = self.K_local[2 * j : 2 * j + 2, 2 * j : 2 * j + 2]
        return StiffnessMatrix2(b[0, 0], b[0, 1], b[1, 1])

    def local_force(self, F_global) -> np.ndarray:
        """Condensed force in shifted local coordinates."""
        F = np.asarray(F_global, dtype=float)
        r = F[self.cdofs] - (self._G @ F[self.odofs] if self.odofs.size else 0.0)
        return self.Q @ r - self.K_local @ self._shift

    def recover(self, local_u, F_global) -> np.ndarray:
        """Full nodal displacements from shifted local contact positions."""
        F = np.asarray(F_global, dtype=float)
        uc = self.Q.T @ (np.asarray(local_u, dtype=float) + self._shift)
        u = np.zeros(2 * self.mesh.n_nodes)
        u[self.cdofs] = uc
        if self.odofs.size:
            u[self.odofs] = cho_solve(self._Koo, F[self.odofs] - self._Koc @ uc)
        return u.reshape(-1, 2)

    def local_state(self, u_nodal) -> np.ndarray:
        u = np.asarray(u_nodal, dtype=float).reshape(-1)
        return self.Q @ u[self.cdofs] - self._shift

    # solvers -----------------------------------------------------------

    def tresca(self, Fl, w_t, sigma, start=None) -> np.ndarray:
        """Block Gauss-Seidel for the Tresca problem with per-node bounds."""
        nc = self.n_contact
        K = self.K_local
        u = np.zeros(2 * nc) if start is None else np.array(start, dtype=float)
        scale = max(1.0, float(np.abs(Fl).max()) / self.lambda_min)
        for sweep in range(1, INNER_MAX_SWEEPS + 1):
            change = 0.0
            for j in range(nc):
                sl = slice(2 * j, 2 * j + 2)
                rhs = Fl[sl] - K[sl] @ u + K[sl, sl] @ u[sl]
                un, ut, _, _ = _tresca(K[2 * j, 2 * j], K[2 * j, 2 * j + 1], K[2 * j + 1, 2 * j + 1], rhs[0], rhs[1], w_t[j], sigma[j])
                change = max(change, abs(un - u[2 * j]), abs(ut - u[2 * j + 1]))
                u[2 * j], u[2 * j + 1] = un, ut
            if change <= INNER_TOL * max(scale, float(np.abs(u).max())) or nc == 1:
                return u
        raise NonConvergence(f"Gauss-Seidel sweeps stalled after {INNER_MAX_SWEEPS}", INNER_MAX_SWEEPS, u)

    def _states(self, u, Fl, sigma) -> tuple[ContactState, ...]:
        t = self.K_local @ u - Fl
        out = []
        for j in range(self.n_contact):
            tn = min(t[2 * j], 0.0) if u[2 * j] == 0.0 else 0.0
            # the tangential multiplier lives in [-sigma_j, sigma_j]; clipping
            # removes sweep-tolerance noise (and makes f = 0 exactly frictionless)
            tt = min(max(t[2 * j + 1], -sigma[j]), sigma[j])
            out.append(ContactState(u[2 * j], u[2 * j + 1], tn, tt))
        return tuple(out)

    def node_reports(self, states, Fl, w_t, f, tol: float = NODE_KKT_TOL) -> tuple[ResidualReport, ...]:
        """Per-node incremental residuals with the other nodes frozen."""
        reps = []
        for j, st in enumerate(states):
            sl = slice(2 * j, 2 * j + 2)
            u = np.concatenate([s.u for s in states])
            Fj = Fl[sl] - self.K_local[sl] @ u + self.K_local[sl, sl] @ u[sl]
            reps.append(check_incremental_kkt(self.node_stiffness(j), Fj, w_t[j], f, st, tol=tol))
        return tuple(reps)

    def solve(self, F_global, w_t, f: float, select: str = LARGEST) -> FemSolution:
        """Nodal Coulomb step: fixed point over the nodal friction bounds."""
        f = check_friction(f)
        nc = self.n_contact
        w_t = np.asarray(w_t, dtype=float).reshape(nc)
        Fl = self.local_force(F_global)
        if nc == 0:
            u = self.recover(np.zeros(0), F_global)
            return FemSolution(u, (), np.zeros(0), 0, True)
        if nc == 1:
            K1 = self.node_stiffness(0)
            sol = solve_incremental(K1, Fl, w_t[0], f, select=select)
            ul = sol.state.u
            states = (sol.state,)
            sigma = np.array([sol.sigma])
            its, unique = sol.iterations, sol.unique
        else:
            ul, sigma, its = self._outer(Fl, w_t, f)
            states = self._states(ul, Fl, sigma)
            unique = f == 0.0
        reps = self.node_reports(states, Fl, w_t, f)
        u = self.recover(ul, F_global)
        out = FemSolution(u, states, sigma, its, unique, reps)
        if not all(r.passed for r in reps):
            bad = [j for j, r in enumerate(reps) if not r.passed]
            raise NonConvergence(f"contact nodes {bad} fail the incremental residual check", its, out)
        return out

    def _outer(self, Fl, w_t, f):
        nc = self.n_contact
        if f == 0.0:
            sigma = np.zeros(nc)
            return self.tresca(Fl, w_t, sigma), sigma, 1
        # start from the stuck configuration: the most friction available
        u = self.tresca(Fl, w_t, np.full(nc, np.inf))
        sigma = -f * np.array([s.t_n for s in self._states(u, Fl, np.full(nc, np.inf))])
        scale = max(1.0, float(np.abs(Fl).max()))
        for k in range(1, OUTER_MAX_ITERS + 1):
            u = self.tresca(Fl, w_t, sigma, start=u)
            new = -f * np.array([s.t_n for s in self._states(u, Fl, sigma)])
            if np.abs(new - sigma).max() <= OUTER_TOL * scale:
                sigma = new
                u = self.tresca(Fl, w_t, sigma, start=u)
                return u, sigma, k
            omega = 1.0 if k <= DAMPING_AFTER else DAMPING
            sigma = (1 - omega) * sigma + omega * new
        raise NonConvergence(f"nodal friction bounds did not settle after {OUTER_MAX_ITERS} iterations", OUTER_MAX_ITERS, (u, sigma))


def solve_incremental_fem(
    mesh: PlaneMesh,
    mat: ElasticMaterial,
    w_t,
    f: float,
    traction=(0.0, 0.0),
    body=(0.0, 0.0),
    mode: str = VIRTUAL_WORK,
    select: str = LARGEST,
) -> FemSolution:
    cond = CondensedContact(mesh, mat)
    return cond.solve(load_vector(mesh, traction, body, mode), w_t, f, select)


# --------------------------------------------------------------------------
# quasi-static march on a mesh


@dataclass(frozen=True, eq=False)
class FemMarchReport:
    breakpoints: np.ndarray
    solutions: tuple[FemSolution, ...]
    jumps: tuple[tuple[float, float], ...]
    jump_left: dict = field(repr=False)
    local_loads: np.ndarray = field(repr=False)
    subdivision: Subdivision = field(repr=False)
    stability_constant: float = 0.0
    nonunique_steps: tuple[float, ...] = ()

    def node_trajectory(self, j: int) -> Trajectory:
        """Local (shifted) trajectory of contact node ``j``."""
        states = tuple(sol.local[j] for sol in self.solutions)
        records = []
        for k, left in self.jump_left.items():
            rec = JumpRecord(float(self.breakpoints[k]), left.local[j], states[k])
            if rec.magnitude > 1e-14 or abs(rec.left.t_n - rec.right.t_n) + abs(rec.left.t_t - rec.right.t_t) > 1e-14:
                records.append(rec)
        return Trajectory(self.breakpoints, states, tuple(records), PIECEWISE_CONSTANT)

    @property
    def passed(self) -> bool:
        return all(r.passed for sol in self.solutions[1:] for r in sol.reports)

    @property
    def max_residual(self) -> float:
        vals = [r.max_normalized for sol in self.solutions[1:] for r in sol.reports]
        return max(vals, default=0.0)


def march_fem(
    mesh: PlaneMesh,
    mat: ElasticMaterial,
    load: LoadPath,
    f: float,
    m: int,
    *,
    u0=None,
    body=(0.0, 0.0),
    mode: str = VIRTUAL_WORK,
    jump_factor: float = DEFAULT_JUMP_FACTOR,
    select: str = LARGEST,
    localize: bool = True,
) -> FemMarchReport:
    """March a mesh under a time-dependent uniform traction ``load`` on the loaded edges.

    Stepping, jump detection and localization are those of
    :func:`frictio.march.march`; the jump threshold uses the condensed
    contact stiffness and the condensed force increments.
    """
    f = check_friction(f)
    if load.dim != 2:
        raise ValueError("the load path must carry a 2-component traction")
    cond = CondensedContact(mesh, mat)
    base = load_vector(mesh, (0.0, 0.0), body, mode)
    ex = load_vector(mesh, (1.0, 0.0), (0.0, 0.0), mode)
    ey = load_vector(mesh, (0.0, 1.0), (0.0, 0.0), mode)

    def F_of(T) -> np.ndarray:
        return base + T[0] * ex + T[1] * ey

    nc = cond.n_contact
    amp = float(np.linalg.norm(np.column_stack([cond.local_force(ex) - cond.local_force(np.zeros_like(ex)),
                                                cond.local_force(ey) - cond.local_force(np.zeros_like(ey))]), 2)) if nc else 0.0
    F0 = F_of(load.value(0.0))
    u0 = np.zeros((mesh.n_nodes, 2)) if u0 is None else np.asarray(u0, dtype=float).reshape(-1, 2)
    Fl0 = cond.local_force(F0)
    ul0 = cond.local_state(u0)
    t0 = cond.K_local @ ul0 - Fl0
    states0 = tuple(ContactState(ul0[2 * j], ul0[2 * j + 1], t0[2 * j], t0[2 * j + 1]) for j in range(nc))
    reps0 = cond.node_reports(states0, Fl0, ul0[1::2], f, tol=1e-9)
    if not all(r.passed for r in reps0):
        raise InadmissibleInitialCondition("initial displacement is not admissible at some contact node")
    start = FemSolution(cond.recover(ul0, F0), states0, -f * t0[0::2] if nc else np.zeros(0), 0, True, reps0)

    sub = build_subdivision(load, m)
    thr = sub.threshold
    lam = cond.lambda_min

    def solve(point: PathPoint, prev: FemSolution):
        w = np.array([s.u_t for s in prev.local])
        sol = cond.solve(F_of(point.value), w, f, select)
        return sol, sol.unique

    loc_cache: dict[float, np.ndarray] = {}

    def local_load(point: PathPoint) -> np.ndarray:
        key = point.time
        if key not in loc_cache:
            loc_cache[key] = cond.local_force(F_of(point.value))
        return loc_cache[key]

    def is_jump(base_pt, prev: FemSolution, pt, sol: FemSolution) -> bool:
        if nc == 0:
            return False
        du = float(np.linalg.norm(sol.contact_vector - prev.contact_vector))
        dF = float(np.linalg.norm(local_load(pt) - local_load(base_pt)))
        return du > jump_factor * (dF + amp * thr) / lam

    walk = walk_subdivision(load, sub, start, solve, is_jump, localize)
    sols = tuple(walk.states)
    bps = np.array([p.time for p in walk.points])
    loads = np.array([local_load(p) for p in walk.points]) if nc else np.zeros((len(bps), 0))
    jump_left = {k: left for k, left in walk.jumps}
    jumps = tuple(
        (float(bps[k]), float(np.linalg.norm(sols[k].contact_vector - left.contact_vector))) for k, left in walk.jumps
    )
    stab = 0.0
    for i in range(1, len(sols)):
        if i in jump_left:
            continue
        dF = float(np.linalg.norm(loads[i] - loads[i - 1]))
        if dF > 0.0:
            stab = max(stab, float(np.linalg.norm(sols[i].contact_vector - sols[i - 1].contact_vector)) / dF)
    nonunique = tuple(float(bps[i]) for i in range(1, len(sols)) if not walk.unique[i])
    return FemMarchReport(bps, sols, jumps, jump_left, loads, sub, stab, nonunique)


def single_triangle_mesh(A=(-1.0, 0.0), B=(0.0, 0.0), C=(1.0, -1.0), gap: float = 0.0) -> PlaneMesh:
    """Vertex A in contact with the half-plane y >= gap, B and C clamped, edge AC loaded."""
    pts = np.array([A, B, C], dtype=float)
    tri = [0, 1, 2] if _twice_signed_area(*pts) > 0 else [0, 2, 1]
    return PlaneMesh(pts, [tri], (1, 2), ((0, 2),), (ContactNode(0, gap, (0.0, 1.0)),))


def triangle_load_map(A, C, mode: str = VIRTUAL_WORK) -> float:
    """Factor turning an edge traction on AC into the nodal force at A."""
    return float(consistent_edge_load(A, C, (1.0, 0.0), mode)[0])


def traction_for_force(F_nt, A, C, mode: str = VIRTUAL_WORK) -> np.ndarray:
    """Traction (x, y) on AC whose nodal force at A equals ``F_nt`` in (n, t) = (y, x)."""
    F_nt = np.asarray(F_nt, dtype=float)
    return np.array([F_nt[1], F_nt[0]]) / triangle_load_map(A, C, mode)

