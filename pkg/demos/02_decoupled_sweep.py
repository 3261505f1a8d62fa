"""
The decoupled phase-field energy as eps -> 0.

A phase ``v`` is subtracted from the determinant inside ``h`` and paid for
by ``eps^2/2 |v'|^2 + phi_tau(v) / (2 eps^2)``. Smooth maps can then mimic a
hole: ``v`` fills a small core with ``v >= tau`` and the minimal energy
drops from the affine value toward the cavitating one as eps shrinks.

Descent from (affine, v=0) cannot climb the phi_tau barrier, so each run
also restarts from filled-core seeds of 1..3 cells and keeps the lowest.
Takes about half a minute.

Run:  python demos/02_decoupled_sweep.py
"""
import os
from concurrent.futures import ProcessPoolExecutor

from cavlab.decoupled import el_residual_norm, minimize_decoupled
from cavlab.models import PenaltyModel, radial_model
from cavlab.radial import RadialGrid, affine_energy, minimize_classical

model = radial_model()
grid = RadialGrid(100)
lam = 1.5
eps2_list = [1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10]


def one(eps2):
    pen = PenaltyModel.from_eps2(eps2, tau=3.0)
    run = minimize_decoupled(lam, pen, model, grid)
    return eps2, run.energy, run.first_slope, run.core_cells, el_residual_norm(run.result, pen,
                                                                                 model)


if __name__ == "__main__":
    print(f"affine energy     {affine_energy(lam, model):.6f}")
    print(f"cavitating energy {minimize_classical(lam, model, grid).energy:.6f}\n")
    workers = int(os.environ.get("CAVLAB_THREADS", "1"))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        rows = list(ex.map(one, eps2_list))
    print("  eps^2    energy     dr_1/2   core  EL residual")
    for eps2, e, slope, k, res in rows:
        print(f"  {eps2:.0e}  {e:.6f}  {slope:7.2f}   {k}     {res:.2e}")
