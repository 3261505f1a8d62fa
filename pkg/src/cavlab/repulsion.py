"""Energy blow-up of non-cavitating approximations of the cavitating solution.

Each approximant replaces the cavity by an affine core of radius ``1/n``.
The distortional energy of the family stays bounded while the
compressibility energy of the core grows like ``n^3``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import MaterialModel
from .radial import RadialField, RadialGrid, energy_rad_parts, minimize_classical


def truncate_core(rc_field: RadialField, n: int) -> RadialField:
    """``r_n = n r_c(1/n) R`` on ``[0, 1/n]`` and ``r_c`` beyond."""
    if n < 2:
        raise ValueError("n must be >= 2")
    m = rc_field.grid.m
    if m % n:
        raise ValueError(f"n={n} does not divide the grid size m={m}")
    k = m // n
    R = rc_field.grid.nodes
    r = rc_field.r.copy()
    r[:k + 1] = n * rc_field.r[k] * R[:k + 1]
    return RadialField(rc_field.grid, r)


@dataclass
class RepulsionRow:
    n: int
    E_total: float
    E_tilde: float
    E_h: float


def repulsion_table(rc_field: RadialField, ns, model: MaterialModel) -> list:
    rows = []
    for n in ns:
        parts = energy_rad_parts(truncate_core(rc_field, n), model)
        rows.append(RepulsionRow(int(n), parts.total, parts.tilde, parts.h))
    return rows


def classical_for_repulsion(lam: float, model: MaterialModel, ns, opts=None) -> RadialField:
    """Classical minimizer on a grid with ``m = 16 max(ns)`` cells."""
    grid = RadialGrid(16 * int(max(ns)))
    return minimize_classical(lam, model, grid, opts).field


def core_h_asymptote(rc_field: RadialField, model: MaterialModel) -> float:
    """Leading coefficient ``(c1/3) r_c(0)^(3 gamma)`` of ``E_h(n) / n^(3 gamma - 3)``."""
    return model.c1 / 3.0 * float(rc_field.r[0]) ** (3 * model.gamma)


def tilde_reference(rc_field: RadialField, model: MaterialModel) -> float:
    return energy_rad_parts(rc_field, model).tilde


def monotone(values) -> bool:
    return bool(np.all(np.diff(np.asarray(values, dtype=float)) > 0))
