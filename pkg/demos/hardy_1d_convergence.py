"""Outgoing waves on a half line, represented by a handful of Hardy modes.

A source ``g`` at the left end of ``[0, a]`` drives ``-u'' - kappa^2 u = 0``;
beyond ``a`` the solution is the outgoing wave ``u(a) exp(i kappa (r - a))``.
Its Hardy coefficients form a geometric sequence with ratio
``rho = |(kappa - kappa0) / (kappa + kappa0)|``, so truncating after ``N``
modes costs about ``rho^N``.  This script prints both the coefficient error
and the error of the boundary value ``u(a)``, which converges twice as fast.

Run with ``python demos/hardy_1d_convergence.py``.
"""
from __future__ import annotations

import numpy as np

from hsie.hardy import HardyParams, reference_hardy_coefficients
from hsie.solver1d import Problem1D, exact_u0, solve_scattering_1d

kappa, kappa0 = 2.0, 4.0
rho = abs((kappa - kappa0) / (kappa + kappa0))
print(f"kappa = {kappa}, kappa0 = {kappa0}, rho = {rho:.4f}\n")
print(f"{'N':>3}  {'coeff error':>12}  {'ratio':>6}  {'u(a) error':>12}  {'ratio':>6}")

prev = None
for N in range(0, 15):
    prob = Problem1D(a=1.0, kappa=kappa, g=1.0, fe_order=6, n_cells=20, hardy=HardyParams(kappa0, N))
    sol = solve_scattering_1d(prob)
    ref = reference_hardy_coefficients(kappa, prob.hardy, exact_u0(prob))
    c = sol.transformed_coefficients()[:N + 1]
    ec = np.linalg.norm(c - ref) / np.linalg.norm(ref)
    eu = abs(sol.u0 - exact_u0(prob)) / abs(exact_u0(prob))
    rc = ru = ""
    if prev is not None:
        rc, ru = f"{ec / prev[0]:6.3f}", f"{eu / prev[1]:6.3f}"
    print(f"{N:3d}  {ec:12.3e}  {rc:>6}  {eu:12.3e}  {ru:>6}")
    prev = (ec, eu)

# with kappa0 = kappa the single mode N = 0 is already exact; only the FE error remains
prob = Problem1D(a=1.0, kappa=kappa, g=1.0, fe_order=4, n_cells=20, hardy=HardyParams(kappa, 0))
err = abs(solve_scattering_1d(prob).u0 - exact_u0(prob)) / abs(exact_u0(prob))
print(f"\nkappa0 = kappa, N = 0: relative error of u(a) = {err:.2e}")
