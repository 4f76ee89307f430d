"""The Hardy space infinite element as a discrete Dirichlet-to-Neumann map.

On a half strip ``[0, L] x [0, inf)`` with natural ends, eliminating the
exterior unknowns leaves a map on the boundary trace.  On a transverse
eigendirection with eigenvalue ``mu`` the exact map multiplies by
``-i sqrt(kappa^2 - mu)``: oscillatory for ``mu < kappa^2``, decaying for
``mu > kappa^2``.  The HSIE reproduces both regimes with one ``kappa0``.
"""
from __future__ import annotations

import numpy as np

from hsie.exterior import strip_dtn_values

kappa, kappa0 = 4.0, 4.0 + 2.0j
modes = [0, 1, 3, 5]
for N in (5, 10, 20, 40):
    mu, vals, exact = strip_dtn_values(kappa, kappa0, N, fe_order=7, edge_length=np.pi, modes=modes)
    err = np.abs(vals - exact) / np.abs(exact)
    print(f"N = {N:2d}: " + "  ".join(f"mu={m:7.3f} err={e:.1e}" for m, e in zip(mu, err)))

mu, vals, exact = strip_dtn_values(kappa, kappa0, 40, fe_order=7, edge_length=np.pi, modes=modes)
print("\nmu        HSIE value                  -i sqrt(kappa^2 - mu)")
for m, v, e in zip(mu, vals, exact):
    kind = "propagating" if m < kappa**2 else "evanescent"
    print(f"{m:7.3f}  {v.real:+.10f}{v.imag:+.10f}i  {e.real:+.10f}{e.imag:+.10f}i  {kind}")
