"""Radial grids, the classical radial energy and its cavitating minimizer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import (InfeasibleError, MaterialModel, PenaltyModel, h_eval, h_second, ogden_phi,
                     ogden_second, phi_tau_eval, phi_tau_second)
from .optimize import OptProblem, minimize

FEAS_MARGIN = 1e-14
COARSE_START_MIN = 256


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid ``R_i = i/m`` on [0, 1]."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def h_step(self) -> float:
        return 1.0 / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m


@dataclass
class RadialField:
    grid: RadialGrid
    r: np.ndarray
    v: np.ndarray = None

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        if self.v is None:
            self.v = np.zeros_like(self.r)
        self.v = np.asarray(self.v, dtype=float)
        if self.r.shape != (self.grid.m + 1,) or self.v.shape != self.r.shape:
            raise ValueError("field arrays must have m+1 entries")

    @classmethod
    def affine(cls, grid: RadialGrid, lam: float) -> "RadialField":
        return cls(grid, lam * grid.nodes)

    @property
    def lam(self) -> float:
        return float(self.r[-1])

    def copy(self) -> "RadialField":
        return RadialField(self.grid, self.r.copy(), self.v.copy())

    def cell_quantities(self):
        """Midpoint slope, hoop stretch, determinant, phase and phase slope."""
        hs = self.grid.h_step
        r, v = self.r, self.v
        dr = np.diff(r) / hs
        s = (r[1:] + r[:-1]) / (2.0 * self.grid.midpoints)
        det = dr * s * s
        vm = 0.5 * (v[1:] + v[:-1])
        dv = np.diff(v) / hs
        return dr, s, det, vm, dv

    @property
    def first_slope(self) -> float:
        return float((self.r[1] - self.r[0]) / self.grid.h_step)

    def is_feasible(self) -> bool:
        dr, s, det, vm, _ = self.cell_quantities()
        return bool(np.all(dr > 0) and np.all(s > 0) and np.all(self.v >= 0)
                    and np.all(det - vm > FEAS_MARGIN))


@dataclass
class EnergyParts:
    tilde: float = 0.0
    h: float = 0.0
    grad_v: float = 0.0
    phi: float = 0.0

    @property
    def total(self) -> float:
        return self.tilde + self.h + self.grad_v + self.phi

    def as_dict(self) -> dict:
        return {"tilde": self.tilde, "h": self.h, "grad_v": self.grad_v, "phi": self.phi}


def radial_energy(field: RadialField, model: MaterialModel, pen: PenaltyModel | None = None,
                  with_grad: bool = False):
    """Midpoint-rule radial energy with optional phase terms.

    Returns ``(parts, grad_r, grad_v)``; the gradients are with respect to
    every nodal value and are ``None`` unless ``with_grad``.
    """
    grid = field.grid
    hs = grid.h_step
    dr, s, det, vm, dv = field.cell_quantities()
    if np.any(~(dr > 0)) or np.any(~(s > 0)):
        raise InfeasibleError("radial deformation is not increasing")
    arg = det - vm
    if np.any(~(arg > 0)):
        raise InfeasibleError("det - v must stay positive")
    w = hs * grid.midpoints ** 2
    tilde, (p1, p2, _) = ogden_phi(dr, s, s, model)
    hv, hd = h_eval(arg, model)
    parts = EnergyParts(tilde=float(np.dot(w, tilde)), h=float(np.dot(w, hv)))
    if pen is not None:
        a = pen.alpha
        adv = np.abs(dv)
        phv, phd = phi_tau_eval(vm, pen)
        parts.grad_v = float(pen.grad_coef * np.dot(w, adv ** a))
        parts.phi = float(pen.phi_coef * np.dot(w, phv))
    if not with_grad:
        return parts, None, None

    # derivatives of the cell energy with respect to slope and hoop stretch
    e_dr = w * (p1 + hd * s * s)
    e_s = w * (2.0 * p2 + 2.0 * hd * dr * s)
    ds = 1.0 / (2.0 * grid.midpoints)
    grad_r = np.zeros_like(field.r)
    grad_r[1:] += e_dr / hs + e_s * ds
    grad_r[:-1] += -e_dr / hs + e_s * ds
    grad_v = np.zeros_like(field.v)
    e_vm = -w * hd
    if pen is not None:
        e_vm = e_vm + w * pen.phi_coef * phd
        e_dv = w * pen.eps ** pen.alpha * adv ** (pen.alpha - 1) * np.sign(dv)
        grad_v[1:] += e_dv / hs
        grad_v[:-1] -= e_dv / hs
    grad_v[1:] += 0.5 * e_vm
    grad_v[:-1] += 0.5 * e_vm
    return parts, grad_r, grad_v


def radial_hess_diag(field: RadialField, model: MaterialModel, pen: PenaltyModel | None = None,
                     floor: float = 1e-300):
    """Absolute diagonal of the Hessian of ``radial_energy`` (nodal r, v)."""
    grid = field.grid
    hs = grid.h_step
    dr, s, det, vm, dv = field.cell_quantities()
    w = hs * grid.midpoints ** 2
    arg = det - vm
    _, hd = h_eval(arg, model)
    h2 = h_second(arg, model)
    ds = 1.0 / (2.0 * grid.midpoints)
    e_drdr = w * (ogden_second(dr, model) + h2 * s ** 4)
    e_ss = w * (2.0 * ogden_second(s, model) + 2.0 * hd * dr + h2 * (2.0 * dr * s) ** 2)
    e_drs = w * (2.0 * hd * s + 2.0 * h2 * dr * s ** 3)
    up = e_drdr / hs ** 2 + 2.0 * e_drs * ds / hs + e_ss * ds * ds
    down = e_drdr / hs ** 2 - 2.0 * e_drs * ds / hs + e_ss * ds * ds
    diag_r = np.zeros_like(field.r)
    diag_r[1:] += np.abs(up)
    diag_r[:-1] += np.abs(down)
    e_vv = w * h2
    if pen is not None:
        e_vv = e_vv + w * pen.phi_coef * np.abs(phi_tau_second(vm, pen))
        a = pen.alpha
        e_dd = w * pen.eps ** a * (a - 1) * np.maximum(np.abs(dv), 1e-12) ** (a - 2)
    else:
        e_dd = np.zeros_like(w)
    diag_v = np.zeros_like(field.v)
    diag_v[1:] += 0.25 * e_vv + e_dd / hs ** 2
    diag_v[:-1] += 0.25 * e_vv + e_dd / hs ** 2
    return np.maximum(diag_r, floor), np.maximum(diag_v, floor)


def energy_rad(field: RadialField, model: MaterialModel) -> float:
    """Classical radial energy ``int R^2 [Phi(r', r/R, r/R) + h(r' (r/R)^2)] dR``.

    No 4*pi factor. The phase field of ``field`` must vanish.
    """
    if np.any(field.v != 0):
        raise ValueError("energy_rad expects v == 0")
    return radial_energy(field, model)[0].total


def energy_rad_parts(field: RadialField, model: MaterialModel) -> EnergyParts:
    return radial_energy(field, model)[0]


def affine_energy(lam: float, model: MaterialModel) -> float:
    """Closed-form energy of ``r = lam R``: ``(Phi(lam, lam, lam) + h(lam^3)) / 3``."""
    return (ogden_phi(lam, lam, lam, model)[0] + h_eval(lam ** 3, model)[0]) / 3.0


@dataclass
class ClassicalResult:
    field: RadialField
    energy: float
    cavity_radius: float
    reports: list = field(default_factory=list)


def minimize_classical(lam: float, model: MaterialModel, grid: RadialGrid,
                       opts: dict | None = None) -> ClassicalResult:
    """Minimize the classical radial energy over ``r_0 >= 0``, ``r_m = lam``.

    Two starts are run: the affine map, and the pre-cavitated profile
    ``r^3 = r_0^3 + (lam^3 - r_0^3) R^3`` with ``r_0 = lam / 2`` (uniform
    determinant). On grids of 256 cells or more the second start is instead
    the minimizer on the half-size grid, interpolated, since a cold start
    converges too slowly there. The lower energy wins.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    opts = dict(opts or {})
    m = grid.m
    lb = np.full(m, -np.inf)
    lb[0] = 0.0

    def build(x):
        return RadialField(grid, np.append(x, lam))

    def objective(x):
        parts, gr, _ = radial_energy(build(x), model, with_grad=True)
        return parts.total, gr[:-1]

    def feasible(x):
        r = np.append(x, lam)
        dr = np.diff(r)
        return bool(np.all(dr > 0) and np.all(r[1:] + r[:-1] > 0))

    def precond(x):
        return radial_hess_diag(build(x), model)[0][:-1]

    R = grid.nodes
    r0 = lam / 2
    starts = [lam * R[:-1], np.cbrt(r0 ** 3 + (lam ** 3 - r0 ** 3) * R ** 3)[:-1]]
    if m >= COARSE_START_MIN and m % 2 == 0:
        coarse = minimize_classical(lam, model, RadialGrid(m // 2), opts).field
        starts[1] = interpolate_field(coarse, m).r[:-1]
    best = None
    reports = []
    for x0 in starts:
        rep = minimize(OptProblem(objective, x0, lb, feasible, precond), **opts)
        reports.append(rep)
        if best is None or rep.f_final < best.f_final:
            best = rep
    fld = build(best.x_final)
    return ClassicalResult(fld, best.f_final, float(fld.r[0]), reports)


def fluid_radial_exact(lam: float, d0: float, R):
    """Two-dimensional elastic-fluid radial minimizer.

    ``sqrt(d0 R^2 + lam^2 - d0)`` when ``lam > sqrt(d0)``, otherwise ``lam R``.
    """
    R = np.asarray(R, dtype=float)
    if lam > np.sqrt(d0):
        out = np.sqrt(d0 * R * R + lam * lam - d0)
    else:
        out = lam * R
    return float(out) if out.ndim == 0 else out


def interpolate_field(field: RadialField, m: int) -> RadialField:
    """Linear interpolation of ``field`` onto a uniform grid with ``m`` cells."""
    grid = RadialGrid(m)
    R = grid.nodes
    src = field.grid.nodes
    return RadialField(grid, np.interp(R, src, field.r), np.interp(R, src, field.v))
