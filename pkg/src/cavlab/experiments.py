"""One function per experiment: run it from a RunConfig and write its files."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig
from .decoupled import (el_residual_norm, gamma_test_pair, minimize_decoupled, table1_sweep)
from .fem import det_adj_grad, gaussian_seed, mesh_disk, run_flow
from .models import h_eval
from .radial import RadialGrid, affine_energy, minimize_classical
from .repulsion import (classical_for_repulsion, core_h_asymptote, repulsion_table,
                        tilde_reference)

log = logging.getLogger(__name__)


def worker_count() -> int:
    raw = os.environ.get("CAVLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CAVLAB_THREADS: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"CAVLAB_THREADS: expected a positive integer, got {raw!r}")
    return n


def _base_summary(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict(), "versions": io.versions()}


def run_radial_classical(cfg: RunConfig, out: Path) -> dict:
    model = cfg.material_model()
    res = minimize_classical(cfg.lam, model, RadialGrid(cfg.grid["m"]), cfg.optimizer)
    io.write_radial_field(out, res.field)
    from .radial import energy_rad_parts
    rep = min(res.reports, key=lambda r: r.f_final)
    return {"energy": res.energy, "cavity_radius": res.cavity_radius,
            "parts": energy_rad_parts(res.field, model).as_dict(),
            "affine_energy": affine_energy(cfg.lam, model), "iterations": rep.iterations,
            "converged": rep.converged, "stop_reason": rep.stop_reason}


def run_radial_decoupled(cfg: RunConfig, out: Path) -> dict:
    model, pen = cfg.material_model(), cfg.penalty_model()
    grid = RadialGrid(cfg.grid["m"])
    run = minimize_decoupled(cfg.lam, pen, model, grid, None, cfg.optimizer,
                             cfg.decoupled["core_cells"])
    io.write_radial_field(out, run.result)
    return {"energy": run.energy, "parts": run.energy_parts.as_dict(),
            "dr_half": run.first_slope, "core_cells": run.core_cells,
            "starts": [{"core_cells": k, "energy": e} for k, e in run.starts],
            "el_residual": el_residual_norm(run.result, pen, model),
            "affine_energy": affine_energy(cfg.lam, model), "iterations": run.report.iterations,
            "converged": run.report.converged, "stop_reason": run.report.stop_reason}


def _table_row(args):
    lam, tau, e2, model, m, core_cells, opts = args
    return table1_sweep(lam, tau, [e2], model, RadialGrid(m), core_cells, False, opts)[0]


def run_table1(cfg: RunConfig, out: Path) -> dict:
    model = cfg.material_model()
    eps2 = cfg.table1["eps2_list"]
    tau, m = cfg.penalty["tau"], cfg.grid["m"]
    workers = worker_count()
    if workers > 1 and not cfg.decoupled["warm"] and len(eps2) > 1:
        jobs = [(cfg.lam, tau, e, model, m, cfg.decoupled["core_cells"], cfg.optimizer)
                for e in eps2]
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            rows = list(ex.map(_table_row, jobs))
    else:
        rows = table1_sweep(cfg.lam, tau, eps2, model, RadialGrid(m),
                            cfg.decoupled["core_cells"], cfg.decoupled["warm"], cfg.optimizer)
    io.write_csv(out / "table.csv", ["eps2", "energy", "dr_half"],
                 [(r.eps2, r.energy, r.dr_half) for r in rows])
    return {"rows": [vars(r) for r in rows], "affine_energy": affine_energy(cfg.lam, model),
            "failed_rows": sum(r.status != "ok" for r in rows)}


def run_repulsion(cfg: RunConfig, out: Path) -> dict:
    model = cfg.material_model()
    ns = cfg.repulsion["ns"]
    rc = classical_for_repulsion(cfg.lam, model, ns, cfg.optimizer)
    rows = repulsion_table(rc, ns, model)
    io.write_csv(out / "table.csv", ["n", "E_total", "E_tilde", "E_h"],
                 [(r.n, r.E_total, r.E_tilde, r.E_h) for r in rows])
    return {"rows": [vars(r) for r in rows], "cavity_radius": float(rc.r[0]),
            "tilde_reference": tilde_reference(rc, model),
            "h_asymptote": core_h_asymptote(rc, model), "grid_m": rc.grid.m,
            "affine_energy": affine_energy(cfg.lam, model)}


def run_gamma_pair(cfg: RunConfig, out: Path) -> dict:
    model = cfg.material_model()
    rc = minimize_classical(cfg.lam, model, RadialGrid(cfg.grid["m"]), cfg.optimizer)
    template = cfg.penalty_model()
    gp = cfg.gamma_pair
    rows = []
    for delta in gp["deltas"]:
        pair = gamma_test_pair(delta, cfg.lam, rc.field, model, template, gp["beta1"],
                               gp["quadrature"])
        rows.append({"delta": delta, "eps": pair.eps, "tau": pair.tau, "eta": pair.eta,
                     "energy": pair.energy, "affine_energy": pair.affine_energy,
                     "parts": pair.parts.as_dict()})
    io.write_csv(out / "table.csv", ["delta", "eps", "tau", "eta", "energy", "affine_energy"],
                 [(r["delta"], r["eps"], r["tau"], r["eta"], r["energy"], r["affine_energy"])
                  for r in rows])
    return {"rows": rows, "classical_energy": rc.energy,
            "affine_energy": affine_energy(cfg.lam, model)}


def fluid_diagnostics(mesh, u, v, model) -> dict:
    """Area fraction with ``det - v`` in [0.9, 1.1] and where ``v`` concentrates."""
    _, det, _ = det_adj_grad(mesh, u)
    arg = det - v[mesh.triangles].mean(axis=1)
    near = (arg >= 0.9) & (arg <= 1.1)
    mass = mesh.lumped_mass
    vpos = np.maximum(v, 0.0)
    total = float(mass @ vpos)
    centroid = (mass * vpos) @ mesh.vertices / total if total > 0 else np.zeros(2)
    return {"near_d0_fraction": float(mesh.area[near].sum() / mesh.area.sum()),
            "v_centroid_distance": float(np.linalg.norm(centroid)),
            "v_max": float(v.max()),
            "v_argmax_radius": float(np.linalg.norm(mesh.vertices[int(np.argmax(v))])),
            "v_min": float(v.min())}


def run_fluid2d(cfg: RunConfig, out: Path) -> dict:
    model, pen = cfg.material_model(), cfg.penalty_model()
    mesh = mesh_disk(cfg.mesh["n_rings"], cfg.mesh["jitter"], cfg.seed)
    fl = cfg.flow
    init_v = gaussian_seed(mesh) if fl["init"] == "gaussian" else None
    rep = run_flow(cfg.lam, pen, model, mesh, init_v, fl["max_iter"], fl["update_tol"],
                   fl["dt_u"], fl["dt_v"], fl["solver"], fl["damp"], stop_on=fl["stop_on"])
    st = rep.state
    _, det, _ = det_adj_grad(mesh, st.u)
    io.write_fluid_field(out, mesh, st.u, st.v, mesh.vertex_average(det))
    # exact minimum of the continuum problem: pi h(max(lam^2, d0))
    exact = np.pi * h_eval(max(cfg.lam ** 2, model.d0), model)[0]
    return {"energy": rep.energy, "parts": rep.parts.as_dict(), "iterations": rep.iterations,
            "converged": rep.converged, "stop_reason": rep.stop_reason,
            "exact_energy": exact, "mesh": {"vertices": mesh.n_vertices,
                                            "triangles": mesh.n_triangles,
                                            "area": float(mesh.area.sum())},
            "diagnostics": fluid_diagnostics(mesh, st.u, st.v, model),
            "energy_history_tail": st.energy_history[-10:]}


RUNNERS = {
    "radial-classical": run_radial_classical,
    "radial-decoupled": run_radial_decoupled,
    "table1": run_table1,
    "repulsion": run_repulsion,
    "gamma-pair": run_gamma_pair,
    "fluid2d": run_fluid2d,
}


def run(cfg: RunConfig) -> dict:
    out = io.ensure_dir(cfg.out)
    t0 = time.perf_counter()
    result = RUNNERS[cfg.experiment](cfg, out)
    summary = _base_summary(cfg)
    summary.update(result)
    summary["runtime_s"] = time.perf_counter() - t0
    io.write_summary(out / "summary.json", summary)
    return summary
