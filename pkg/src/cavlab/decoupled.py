"""Decoupled, phase-penalized radial functional and its minimization.

Free unknowns are ``r_1 .. r_{m-1}`` and ``v_0 .. v_{m-1}``; the boundary
values ``r_0 = 0``, ``r_m = lam`` and ``v_m = 0`` are pinned.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .models import (InfeasibleError, MaterialModel, PenaltyModel, h_eval, ogden_phi,
                     phi_tau_eval)
from .optimize import OptProblem, OptReport, minimize
from .radial import (EnergyParts, RadialField, RadialGrid, minimize_classical, radial_energy,
                     radial_hess_diag)

log = logging.getLogger(__name__)


def energy_decoupled(field: RadialField, pen: PenaltyModel, model: MaterialModel):
    """Return ``(total, parts)`` of the discrete decoupled functional."""
    parts = radial_energy(field, model, pen)[0]
    return parts.total, parts


def grad_decoupled(field: RadialField, pen: PenaltyModel, model: MaterialModel) -> np.ndarray:
    """Gradient over the free nodes, ordered ``(r_1..r_{m-1}, v_0..v_{m-1})``."""
    _, gr, gv = radial_energy(field, model, pen, with_grad=True)
    return np.concatenate([gr[1:-1], gv[:-1]])


class DecoupledProblem:
    """Packing between free-node vectors and radial fields at fixed ``lam``."""

    def __init__(self, lam: float, pen: PenaltyModel, model: MaterialModel, grid: RadialGrid):
        self.lam, self.pen, self.model, self.grid = lam, pen, model, grid
        m = grid.m
        self.n_r = m - 1
        self.lower = np.concatenate([np.full(m - 1, -np.inf), np.zeros(m)])

    def pack(self, field: RadialField) -> np.ndarray:
        return np.concatenate([field.r[1:-1], field.v[:-1]])

    def unpack(self, x) -> RadialField:
        r = np.concatenate([[0.0], x[:self.n_r], [self.lam]])
        v = np.append(x[self.n_r:], 0.0)
        return RadialField(self.grid, r, v)

    def objective(self, x):
        fld = self.unpack(x)
        parts, gr, gv = radial_energy(fld, self.model, self.pen, with_grad=True)
        return parts.total, np.concatenate([gr[1:-1], gv[:-1]])

    def feasible(self, x) -> bool:
        return self.unpack(x).is_feasible()

    def precond(self, x):
        dr, dv = radial_hess_diag(self.unpack(x), self.model, self.pen)
        return np.concatenate([dr[1:-1], dv[:-1]])

    def opt_problem(self, x0) -> OptProblem:
        return OptProblem(self.objective, x0, self.lower, self.feasible, self.precond)


@dataclass
class DecoupledRun:
    lam: float
    pen: PenaltyModel
    model: MaterialModel
    grid: RadialGrid
    init: RadialField
    result: RadialField
    energy: float
    energy_parts: EnergyParts
    first_slope: float
    report: OptReport | None = None
    history: list = field(default_factory=list)
    core_cells: int = 0           # 0: the run from ``init`` won
    starts: list = field(default_factory=list)


@lru_cache(maxsize=32)
def _classical_profile(lam: float, model: MaterialModel, m: int) -> tuple:
    return tuple(minimize_classical(lam, model, RadialGrid(m)).field.r)


def core_seed(classical: RadialField, k: int, model: MaterialModel) -> RadialField | None:
    """Classical profile with its first ``k`` cells replaced by a filled core.

    On ``[0, R_k]`` the map is affine, ``r = (r_c(R_k) / R_k) R``, and the
    phase takes up the excess determinant, ``v = a^3 - d0``, at nodes
    ``0..k-1``. Returns None when the core has no excess (``a^3 <= d0``)
    or the seed is infeasible.
    """
    grid = classical.grid
    if not 1 <= k < grid.m:
        raise ValueError("core size must satisfy 1 <= k < m")
    R = grid.nodes
    a = classical.r[k] / R[k]
    excess = a ** 3 - model.d0
    if excess <= 0:
        return None
    f = classical.copy()
    f.r[:k + 1] = a * R[:k + 1]
    f.v[:] = 0.0
    f.v[:k] = excess
    return f if f.is_feasible() else None


def minimize_decoupled(lam: float, pen: PenaltyModel, model: MaterialModel, grid: RadialGrid,
                       init: RadialField | None = None, opts: dict | None = None,
                       core_cells: int | None = None) -> DecoupledRun:
    """Minimize the decoupled functional.

    The run starts from ``init`` (default: affine, ``v = 0``). Pure descent
    from ``v = 0`` cannot cross the penalty barrier, so for the default
    start the search also restarts from filled-core seeds (see
    ``core_seed``) of ``1..core_cells`` cells built on the classical
    cavitating profile, and keeps the lowest local minimum. ``core_cells``
    defaults to 3 for the default start and 0 when ``init`` is given.
    """
    cold = init is None
    if init is None:
        init = RadialField.affine(grid, lam)
    if not init.is_feasible():
        raise ValueError("initial field is infeasible")
    if core_cells is None:
        core_cells = 3 if cold else 0
    prob = DecoupledProblem(lam, pen, model, grid)
    opts = dict(opts or {})

    def run_from(fld):
        x0 = prob.pack(fld)
        return prob.unpack(x0), minimize(prob.opt_problem(x0), **opts)

    init, best = run_from(init)
    best_k, starts = 0, [(0, best.f_final)]
    if core_cells > 0:
        rc = RadialField(grid, np.array(_classical_profile(float(lam), model, grid.m)))
        for k in range(1, core_cells + 1):
            seed = core_seed(rc, k, model)
            if seed is None:
                continue
            try:
                _, rep = run_from(seed)
            except ValueError as exc:
                log.debug("core seed %d rejected: %s", k, exc)
                continue
            starts.append((k, rep.f_final))
            if rep.f_final < best.f_final:
                best, best_k = rep, k
    fld = prob.unpack(best.x_final)
    total, parts = energy_decoupled(fld, pen, model)
    return DecoupledRun(lam, pen, model, grid, init, fld, total, parts, fld.first_slope, best,
                        best.f_history, best_k, starts)


def el_residual(field: RadialField, pen: PenaltyModel, model: MaterialModel):
    """Strong-form Euler-Lagrange residuals at the interior nodes ``1..m-1``.

    ``res_r = d/dR[R^2 Phi_1] - 2 R Phi_2`` and
    ``res_v = sqrt(v) (eps^a d/dR[R^2 |v'|^(a-1) sgn v'] - R^2 [Phi_4 + phi'(v) / (q eps^q)])``
    with ``Phi(v1, v2, v3, v4) = Phi~(v1, v2, v3) + h(v1 v2 v3 - v4)``. Fluxes
    live at cell midpoints, the other terms are averaged onto the nodes.
    """
    grid = field.grid
    hs = grid.h_step
    Rm = grid.midpoints
    Rn = grid.nodes[1:-1]
    dr, s, det, vm, dv = field.cell_quantities()
    _, (p1, p2, _) = ogden_phi(dr, s, s, model)
    _, hd = h_eval(det - vm, model)
    phi1 = p1 + hd * s * s
    phi2 = p2 + hd * dr * s
    flux = Rm ** 2 * phi1
    res_r = np.diff(flux) / hs - Rn * (phi2[1:] + phi2[:-1])

    a = pen.alpha
    gflux = Rm ** 2 * np.abs(dv) ** (a - 1) * np.sign(dv)
    v = field.v[1:-1]
    _, dphi = phi_tau_eval(v, pen)
    phi4 = -0.5 * (hd[1:] + hd[:-1])
    res_v = np.sqrt(v) * (pen.eps ** a * np.diff(gflux) / hs
                          - Rn ** 2 * (phi4 + pen.phi_coef * dphi))
    return res_r, res_v


def el_residual_norm(field: RadialField, pen: PenaltyModel, model: MaterialModel,
                     window=(0.1, 0.9)) -> float:
    """Max-norm of both residuals over interior nodes with ``R`` in ``window``."""
    res_r, res_v = el_residual(field, pen, model)
    R = field.grid.nodes[1:-1]
    sel = (R >= window[0]) & (R <= window[1])
    return float(max(np.max(np.abs(res_r[sel])), np.max(np.abs(res_v[sel]))))


@dataclass
class TestPair:
    __test__ = False  # not a pytest class

    field: RadialField
    eps: float
    tau: float
    eta: float
    energy: float
    affine_energy: float
    parts: EnergyParts


def _test_pair_params(delta, beta1, rc_delta, pen_template, model):
    tau = (rc_delta / delta) ** 3 - model.d0
    if tau <= 0:
        raise ValueError(f"core determinant below d0 at delta={delta}")
    eta = delta ** beta1
    a, q = pen_template.alpha, pen_template.q
    eps = delta ** (((beta1 + 3) * a + beta1) / (a + q))
    pen = PenaltyModel(eps=eps, tau=tau, alpha=a, q=q, M=pen_template.M)
    return tau, eta, pen


def _pair_exact(delta, eta, lam, rc: RadialField, pen, model) -> EnergyParts:
    """Piecewise quadrature of the test pair (closed form core, Gauss on the ramp)."""
    grid = rc.grid
    k = int(round(delta * grid.m))
    c = rc.r[k] / delta
    det = c ** 3
    lo = delta - eta
    core = EnergyParts(tilde=ogden_phi(c, c, c, model)[0] * lo ** 3 / 3.0,
                       h=h_eval(det - pen.tau, model)[0] * lo ** 3 / 3.0)
    x, wq = np.polynomial.legendre.leggauss(20)
    R = lo + 0.5 * eta * (x + 1.0)
    wq = 0.5 * eta * wq * R * R
    v = pen.tau * (delta - R) / eta
    phi, _ = phi_tau_eval(v, pen)
    ramp = EnergyParts(tilde=ogden_phi(c, c, c, model)[0] * float(np.sum(wq)),
                       h=float(np.dot(wq, h_eval(det - v, model)[0])),
                       grad_v=pen.grad_coef * (pen.tau / eta) ** pen.alpha * float(np.sum(wq)),
                       phi=pen.phi_coef * float(np.dot(wq, phi)))
    outer = RadialField(grid, rc.r.copy())
    dr, s, dt, _, _ = outer.cell_quantities()
    w = grid.h_step * grid.midpoints ** 2
    sel = np.arange(grid.m) >= k
    tail = EnergyParts(tilde=float(np.dot(w[sel], ogden_phi(dr, s, s, model)[0][sel])),
                       h=float(np.dot(w[sel], h_eval(dt, model)[0][sel])))
    return EnergyParts(*(getattr(core, n) + getattr(ramp, n) + getattr(tail, n)
                         for n in ("tilde", "h", "grad_v", "phi")))


def gamma_test_pair(delta: float, lam: float, rc_field: RadialField, model: MaterialModel,
                    pen_template: PenaltyModel, beta1: float = 5.0,
                    quadrature: str = "grid") -> TestPair:
    """Recovery-sequence pair ``(r~, v~)`` with its coupled ``(eps, tau)``.

    ``r~`` is affine with slope ``r_c(delta)/delta`` on ``[0, delta]`` and
    follows ``r_c`` beyond; ``v~ = tau`` on ``[0, delta - eta]``, a linear
    ramp down to 0 on ``[delta - eta, delta]`` and 0 beyond, where
    ``tau = (r_c(delta)/delta)^3 - d0``, ``eta = delta^beta1`` and
    ``eps^(a+q) = delta^((beta1+3) a + beta1)``.

    ``quadrature="grid"`` evaluates ``energy_decoupled`` of the pair
    sampled at the nodes of ``rc_field.grid``; ``"exact"`` integrates the
    core in closed form and the ramp by Gauss-Legendre, which resolves
    ``eta`` far below the grid spacing. ``delta`` must be a grid node.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    a, q = pen_template.alpha, pen_template.q
    if beta1 <= max(3 * model.gamma - 2, q):
        raise ValueError(f"beta1 must exceed max(3 gamma - 2, q) = {max(3 * model.gamma - 2, q)}")
    grid = rc_field.grid
    k = delta * grid.m
    if abs(k - round(k)) > 1e-9:
        raise ValueError("delta must be a node of the classical grid")
    k = int(round(k))
    if abs(rc_field.lam - lam) > 1e-12:
        raise ValueError("classical field has a different lambda")
    tau, eta, pen = _test_pair_params(delta, beta1, rc_field.r[k], pen_template, model)

    R = grid.nodes
    r = rc_field.r.copy()
    r[:k + 1] = rc_field.r[k] / delta * R[:k + 1]
    v = np.clip(tau * (delta - R) / eta, 0.0, tau)
    v[k:] = 0.0
    fld = RadialField(grid, r, v)
    aff = energy_decoupled(RadialField.affine(grid, lam), pen, model)[0]
    if quadrature == "grid":
        if not fld.is_feasible():
            raise ValueError("test pair is infeasible on this grid")
        total, parts = energy_decoupled(fld, pen, model)
    elif quadrature == "exact":
        parts = _pair_exact(delta, eta, lam, rc_field, pen, model)
        total = parts.total
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    return TestPair(fld, pen.eps, tau, eta, total, aff, parts)


@dataclass
class TableRow:
    eps2: float
    energy: float = math.nan
    dr_half: float = math.nan
    core_cells: int = 0
    status: str = "ok"
    error: str = ""


def table1_sweep(lam: float, tau: float, eps2_list, model: MaterialModel, grid: RadialGrid,
                 core_cells: int = 3, warm: bool = False, opts: dict | None = None) -> list:
    """One ``minimize_decoupled`` per eps^2, rows in input order.

    Each row starts from (affine, 0) unless ``warm``, in which case it starts
    from the previous row's minimizer and skips the core restarts. A failed
    row records its error and the sweep continues.
    """
    rows, prev = [], None
    for e2 in eps2_list:
        row = TableRow(eps2=float(e2))
        try:
            pen = PenaltyModel.from_eps2(float(e2), tau=tau)
            if warm and prev is not None:
                run = minimize_decoupled(lam, pen, model, grid, prev.copy(), opts)
            else:
                run = minimize_decoupled(lam, pen, model, grid, None, opts, core_cells)
            row.energy, row.dr_half, row.core_cells = run.energy, run.first_slope, run.core_cells
            prev = run.result
        except (ValueError, InfeasibleError, FloatingPointError) as exc:
            row.status, row.error = "failed", str(exc)
            log.warning("table row eps2=%g failed: %s", e2, exc)
        rows.append(row)
    return rows
