"""
Smooth approximations of a cavity cost unbounded energy.

Replace the hole of the cavitating map by an affine core of radius 1/n.
The core is squeezed to the cavity volume, so its determinant is about
``(n r_c(0))^3`` and ``h`` blows up like ``n^3``. The distortional part
stays close to that of the cavitating map.

Run:  python demos/03_repulsion.py
"""
from cavlab.models import radial_model
from cavlab.repulsion import (classical_for_repulsion, core_h_asymptote, repulsion_table,
                              tilde_reference)

model = radial_model()
ns = [2, 4, 8, 16, 32]
rc = classical_for_repulsion(1.5, model, ns)
print(f"cavitating map on {rc.grid.m} cells: r(0) = {rc.r[0]:.5f}")
print(f"distortional energy of the cavitating map {tilde_reference(rc, model):.5f}")
print(f"predicted E_h / n^3 -> {core_h_asymptote(rc, model):.5f}\n")
print("   n    E_total      E_tilde   E_h/n^3")
for row in repulsion_table(rc, ns, model):
    print(f"  {row.n:2d}  {row.E_total:10.3f}  {row.E_tilde:8.5f}  {row.E_h / row.n ** 3:.5f}")
