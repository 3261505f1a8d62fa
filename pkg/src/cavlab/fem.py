"""P1 finite elements on the unit disk and the elastic-fluid gradient flow.

The energy is

    I(u, v) = int h(det grad u - v) + eps^2/2 |grad v|^2 + phi_tau(v) / (2 eps^2)

with ``u = lam x`` and ``v = 0`` on the boundary. ``h`` uses one-point
(centroid) quadrature with the triangle average of ``v``; the penalty uses
the lumped vertex rule; the gradient term is exact for P1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .models import InfeasibleError, MaterialModel, PenaltyModel, h_eval, phi_tau_eval

log = logging.getLogger(__name__)


@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    area: np.ndarray = field(init=False, repr=False)
    grads: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.boundary = np.asarray(sorted(set(int(b) for b in self.boundary)), dtype=np.int64)
        self.area, self.grads = shape_gradients(self.vertices, self.triangles)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    @property
    def lumped_mass(self) -> np.ndarray:
        m = np.zeros(self.n_vertices)
        np.add.at(m, self.triangles.ravel(), np.repeat(self.area / 3.0, 3))
        return m

    def vertex_average(self, cell_values) -> np.ndarray:
        """Area-weighted average of per-triangle values at each vertex."""
        num = np.zeros(self.n_vertices)
        np.add.at(num, self.triangles.ravel(), np.repeat(self.area * cell_values, 3))
        return num / (3.0 * self.lumped_mass)


def shape_gradients(vertices, triangles):
    """Signed areas and gradients of the three barycentric functions."""
    p = vertices[triangles]                       # (nt, 3, 2)
    x, y = p[..., 0], p[..., 1]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    g = np.empty(p.shape)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        g[:, a, 0] = (y[:, b] - y[:, c]) / area2
        g[:, a, 1] = (x[:, c] - x[:, b]) / area2
    return 0.5 * area2, g


def _ring_layout(n_rings):
    pts = [(0.0, 0.0)]
    rings = [[0]]
    for k in range(1, n_rings + 1):
        n = 6 * k
        ang = 2 * np.pi * np.arange(n) / n
        start = len(pts)
        rad = k / n_rings
        pts.extend(zip(rad * np.cos(ang), rad * np.sin(ang)))
        rings.append(list(range(start, start + n)))
    pts = np.array(pts)
    # boundary ring lies on the unit circle exactly
    b = rings[-1]
    ang = 2 * np.pi * np.arange(len(b)) / len(b)
    pts[b] = np.column_stack([np.cos(ang), np.sin(ang)])
    return pts, rings


def _band(inner, outer):
    """Triangulate the annular band between two closed rings, merging by angle."""
    ni, no = len(inner), len(outer)
    tris = []
    i = j = 0
    if ni == 1:
        c = inner[0]
        return [(c, outer[k], outer[(k + 1) % no]) for k in range(no)]
    while i < ni or j < no:
        # compare normalized angular positions of the next candidate vertex
        if j < no and (i >= ni or (j + 1) / no <= (i + 1) / ni):
            tris.append((inner[i % ni], outer[j % no], outer[(j + 1) % no]))
            j += 1
        else:
            tris.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
            i += 1
    return tris


def mesh_disk(n_rings: int, jitter: float = 0.0, seed: int = 0) -> TriMesh:
    """Concentric-ring triangulation of the unit disk.

    Ring ``k`` has ``6k`` vertices at radius ``k/n_rings``; there are
    ``1 + 3 n (n + 1)`` vertices and ``6 n^2`` triangles. Interior vertices
    are displaced by ``jitter / n_rings`` times a uniform sample in
    ``[-1, 1]^2`` from ``numpy.random.default_rng(seed)``. If a triangle
    inverts, the amplitude is halved (at most 5 times).
    """
    if n_rings < 2:
        raise ValueError("n_rings must be >= 2")
    if not 0 <= jitter < 0.5:
        raise ValueError("jitter amplitude must lie in [0, 0.5)")
    pts, rings = _ring_layout(n_rings)
    tris = []
    for k in range(1, n_rings + 1):
        tris.extend(_band(rings[k - 1], rings[k]))
    tris = np.array(tris, dtype=np.int64)
    boundary = np.array(rings[-1])
    interior = np.setdiff1d(np.arange(len(pts)), boundary)

    amp = jitter
    for _ in range(6):
        rng = np.random.default_rng(seed)
        moved = pts.copy()
        if amp > 0:
            moved[interior] += amp / n_rings * rng.uniform(-1.0, 1.0, (len(interior), 2))
        area, _ = shape_gradients(moved, tris)
        if np.all(area > 0):
            return TriMesh(moved, tris, boundary)
        amp *= 0.5
    raise ValueError("jitter produced inverted triangles")


def assemble_laplacian(mesh: TriMesh) -> sp.csr_matrix:
    """P1 stiffness matrix ``int grad phi_a . grad phi_b`` (no elimination)."""
    t = mesh.triangles
    local = np.einsum("tad,tbd->tab", mesh.grads, mesh.grads) * mesh.area[:, None, None]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@dataclass
class DirichletSystem:
    """Stiffness matrix restricted to interior vertices, with a cached solver."""

    mesh: TriMesh
    K: sp.csr_matrix
    K_ii: sp.csc_matrix
    K_ib: sp.csr_matrix
    interior: np.ndarray
    boundary: np.ndarray
    solver: str = "direct"
    _lu: object = None

    def solve(self, rhs_interior, boundary_values=None, rtol=1e-10):
        """Solve ``K_ii z = rhs - K_ib g`` for the interior values."""
        b = np.asarray(rhs_interior, dtype=float)
        if boundary_values is not None:
            b = b - self.K_ib @ boundary_values
        if self.solver == "cg":
            diag = self.K_ii.diagonal()
            pre = spla.LinearOperator(self.K_ii.shape, matvec=lambda x: x / diag)
            out = np.empty_like(b)
            for col in range(b.shape[1]) if b.ndim == 2 else [None]:
                bb = b if col is None else b[:, col]
                x, info = spla.cg(self.K_ii, bb, rtol=rtol, atol=0.0, M=pre, maxiter=10 * len(bb))
                if info != 0:
                    raise RuntimeError("CG did not converge")
                if col is None:
                    out = x
                else:
                    out[:, col] = x
            return out
        if self._lu is None:
            self._lu = spla.splu(self.K_ii)
        return self._lu.solve(b)


def dirichlet_system(mesh: TriMesh, solver: str = "direct") -> DirichletSystem:
    K = assemble_laplacian(mesh)
    inner, bnd = mesh.interior, mesh.boundary
    return DirichletSystem(mesh, K, K[inner][:, inner].tocsc(), K[inner][:, bnd].tocsr(),
                           inner, bnd, solver)


def det_adj_grad(mesh: TriMesh, u):
    """Per-triangle deformation gradient, determinant and 2D adjugate."""
    u = np.asarray(u, dtype=float)
    F = np.einsum("tai,taj->tij", u[mesh.triangles], mesh.grads)
    det = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    adj = np.empty_like(F)
    adj[:, 0, 0] = F[:, 1, 1]
    adj[:, 1, 1] = F[:, 0, 0]
    adj[:, 0, 1] = -F[:, 0, 1]
    adj[:, 1, 0] = -F[:, 1, 0]
    return F, det, adj


@dataclass
class FluidParts:
    h: float
    grad_v: float
    phi: float

    @property
    def total(self) -> float:
        return self.h + self.grad_v + self.phi

    def as_dict(self) -> dict:
        return {"h": self.h, "grad_v": self.grad_v, "phi": self.phi}


def _triangle_mean(mesh, v):
    return v[mesh.triangles].mean(axis=1)


def fluid_energy(mesh: TriMesh, u, v, pen: PenaltyModel, model: MaterialModel):
    """Return ``(total, parts)`` of the discrete elastic-fluid functional."""
    _, det, _ = det_adj_grad(mesh, u)
    arg = det - _triangle_mean(mesh, v)
    if np.any(~(arg > 0)):
        raise InfeasibleError("det grad u - v must stay positive")
    hv, _ = h_eval(arg, model)
    gv = np.einsum("ta,tad->td", v[mesh.triangles], mesh.grads)
    phi, _ = phi_tau_eval(v, pen, extended=True)
    parts = FluidParts(
        h=float(np.dot(mesh.area, hv)),
        grad_v=float(0.5 * pen.eps2 * np.dot(mesh.area, np.sum(gv * gv, axis=1))),
        phi=float(np.dot(mesh.lumped_mass, phi) / (2.0 * pen.eps2)),
    )
    return parts.total, parts


def rhs_u(mesh: TriMesh, u, v, model: MaterialModel):
    """``-int h'(det - v) cof(grad u) : grad q`` for every vertex and component."""
    _, det, adj = det_adj_grad(mesh, u)
    arg = det - _triangle_mean(mesh, v)
    _, hd = h_eval(arg, model)
    # cof = adj^T; contribution to (vertex a, component i) is cof[i, j] grad_a[j]
    local = np.einsum("t,tji,taj->tai", mesh.area * hd, adj, mesh.grads)
    out = np.zeros((mesh.n_vertices, 2))
    np.add.at(out, mesh.triangles.ravel(), local.reshape(-1, 2))
    return -out


def rhs_v(mesh: TriMesh, u, v, pen: PenaltyModel, model: MaterialModel, K=None):
    """``-int [eps^2 grad v . grad r + (-h'(det - v) + phi'(v) / (2 eps^2)) r]``."""
    _, det, _ = det_adj_grad(mesh, u)
    arg = det - _triangle_mean(mesh, v)
    _, hd = h_eval(arg, model)
    if K is None:
        K = assemble_laplacian(mesh)
    out = -pen.eps2 * (K @ v)
    react = np.zeros(mesh.n_vertices)
    np.add.at(react, mesh.triangles.ravel(), np.repeat(mesh.area * hd / 3.0, 3))
    _, dphi = phi_tau_eval(v, pen, extended=True)
    return out + react - mesh.lumped_mass * dphi / (2.0 * pen.eps2)


@dataclass
class FlowState:
    u: np.ndarray
    v: np.ndarray
    dt_u: float
    dt_v: float
    energy_history: list = field(default_factory=list)
    iteration: int = 0
    last_du: float = np.inf
    last_dv: float = np.inf
    vel_u: float = np.inf       # max |z|, the flow velocity before scaling by dt
    vel_v: float = np.inf


class StepFailure(RuntimeError):
    """Time step underflow in the gradient flow."""


DT_MIN = 1e-12


def _feasible(mesh, u, v):
    _, det, _ = det_adj_grad(mesh, u)
    return bool(np.all(det - _triangle_mean(mesh, v) > 0))


@dataclass
class FlowContext:
    mesh: TriMesh
    system: DirichletSystem
    pen: PenaltyModel
    model: MaterialModel
    lam: float
    dt_u_max: float
    dt_v_max: float
    grow: float = 1.1
    damp: bool = True


def _next_dt(dt_used, dt_start, dt_max, grow, increased):
    if dt_used < dt_start:
        return dt_used          # halved for feasibility: no regrowth this step
    if increased:
        return 0.5 * dt_used
    return min(dt_used * grow, dt_max)


def flow_step(state: FlowState, ctx: FlowContext) -> FlowState:
    """One alternating-direction gradient-flow step.

    The ``u`` update uses ``(u_i, v_i)``; the ``v`` update uses
    ``(u_{i+1}, v_i)``. Each step size is halved until the new state keeps
    every ``det - v`` positive. Steps that raise the energy are kept; with
    ``ctx.damp`` the size used for the next step is halved instead of grown.
    Otherwise sizes grow by ``ctx.grow`` up to their maximum.
    """
    mesh, sysm = ctx.mesh, ctx.system
    inner = sysm.interior
    u, v = state.u, state.v
    e_prev = state.energy_history[-1]

    z = np.zeros_like(u)
    z[inner] = sysm.solve(rhs_u(mesh, u, v, ctx.model)[inner])
    dt = state.dt_u
    while True:
        u_new = u + dt * z
        if _feasible(mesh, u_new, v):
            break
        dt *= 0.5
        if dt < DT_MIN:
            raise StepFailure("u step size underflow")
    du = dt * np.max(np.abs(z))
    e_mid = fluid_energy(mesh, u_new, v, ctx.pen, ctx.model)[0]
    dt_u = _next_dt(dt, state.dt_u, ctx.dt_u_max, ctx.grow, ctx.damp and e_mid > e_prev)

    w = np.zeros_like(v)
    w[inner] = sysm.solve(rhs_v(mesh, u_new, v, ctx.pen, ctx.model, sysm.K)[inner])
    dt = state.dt_v
    while True:
        v_new = v + dt * w
        if _feasible(mesh, u_new, v_new):
            break
        dt *= 0.5
        if dt < DT_MIN:
            raise StepFailure("v step size underflow")
    dv = dt * np.max(np.abs(w))
    energy = fluid_energy(mesh, u_new, v_new, ctx.pen, ctx.model)[0]
    dt_v = _next_dt(dt, state.dt_v, ctx.dt_v_max, ctx.grow, ctx.damp and energy > e_mid)

    return FlowState(u_new, v_new, dt_u, dt_v, state.energy_history + [energy],
                     state.iteration + 1, du, dv, float(np.max(np.abs(z))),
                     float(np.max(np.abs(w))))


@dataclass
class FlowReport:
    state: FlowState
    energy: float
    parts: FluidParts
    iterations: int
    converged: bool
    stop_reason: str


def gaussian_seed(mesh: TriMesh, amplitude=1.2, rate=40.0) -> np.ndarray:
    """``amplitude * exp(-rate |x|^2)`` at the vertices, zero on the boundary."""
    x = mesh.vertices
    v = amplitude * np.exp(-rate * np.sum(x * x, axis=1))
    v[mesh.boundary] = 0.0
    return v


def run_flow(lam: float, pen: PenaltyModel, model: MaterialModel, mesh: TriMesh,
             init_v=None, max_iter: int = 5000, update_tol: float = 1e-4,
             dt_u: float = 0.05, dt_v: float = 1e-5, solver: str = "direct",
             damp: bool = True, callback=None, stop_on: str = "velocity") -> FlowReport:
    """Iterate ``flow_step`` from ``u = lam x`` until both updates drop below ``update_tol``.

    ``stop_on="velocity"`` measures the updates per unit pseudo-time
    (``max |z|``, ``max |w|``); ``"update"`` measures the increments
    ``dt max |z|``. The increment test is met trivially when ``dt_v`` is as
    small as the stiff phase equation requires, so velocity is the default.
    """
    if stop_on not in ("velocity", "update"):
        raise ValueError(f"unknown stopping rule {stop_on!r}")
    sysm = dirichlet_system(mesh, solver)
    ctx = FlowContext(mesh, sysm, pen, model, lam, dt_u, dt_v, damp=damp)
    u = lam * mesh.vertices
    v = np.zeros(mesh.n_vertices) if init_v is None else np.array(init_v, dtype=float)
    v[mesh.boundary] = 0.0
    if not _feasible(mesh, u, v):
        raise ValueError("initial state violates det grad u > v")
    e0 = fluid_energy(mesh, u, v, pen, model)[0]
    state = FlowState(u, v, dt_u, dt_v, [e0])
    converged, reason = False, "max_iter"
    for _ in range(max_iter):
        state = flow_step(state, ctx)
        if callback is not None:
            callback(state)
        if stop_on == "velocity":
            done = state.vel_u < update_tol and state.vel_v < update_tol
        else:
            done = state.last_du < update_tol and state.last_dv < update_tol
        if done:
            converged, reason = True, "update_tol"
            break
    total, parts = fluid_energy(mesh, state.u, state.v, pen, model)
    return FlowReport(state, total, parts, state.iteration, converged, reason)
