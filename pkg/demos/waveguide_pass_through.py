"""A guided mode passes through a computational window without reflection.

The fundamental TE mode of a symmetric slab enters through the left side of a
rectangle and leaves through the infinite elements on the right.  The exact
total field is the mode itself, so the relative H1 error on the interior
measures how transparent the exterior discretization is.  The error falls
geometrically with the number of Hardy modes until the finite element error
takes over.
"""
from __future__ import annotations

import time

from hsie.fem import FeSpace, h1_error
from hsie.hardy import HardyParams
from hsie.setups import (WG_HALF_WIDTH, WG_KAPPA, WG_N1, WG_N2, Discretization, build_system, solve_scattering,
                         straight_waveguide_mesh)
from hsie.waveguide import ModeField, solve_slab_mode

mode = solve_slab_mode(WG_KAPPA, WG_HALF_WIDTH, WG_N1, WG_N2)
print(f"fundamental even mode: kappa_x = {mode.kappa_x:.12f}")
field = ModeField(mode)

mesh = straight_waveguide_mesh()
p = 5
space = FeSpace(mesh, p)
print(f"{mesh.n_triangles} triangles, order {p}, {space.n_dofs} interior unknowns\n")
print(f"{'N':>3}  {'unknowns':>8}  {'H1 error':>10}  {'seconds':>7}")
for N in range(1, 13):
    t0 = time.perf_counter()
    system = build_system(mesh, Discretization(p, HardyParams(5 + 5j, N)), space=space)
    x = solve_scattering(system, WG_KAPPA, field)
    err, nrm = h1_error(space, x[:space.n_dofs], field, field.gradient)
    print(f"{N:3d}  {system.n_dofs:8d}  {err / nrm:10.3e}  {time.perf_counter() - t0:7.2f}")
