"""Resonance of a square micro-cavity coupled to two waveguides.

The eigenvalue problem ``S x = kappa^2 M x`` is linear in ``kappa^2`` because
the Hardy space infinite elements do not depend on ``kappa``.  Shift-invert
Arnoldi finds the eigenvalue next to a guess; the sweep over ``N`` reuses the
previous eigenvalue as the next shift.  Lengths are in micrometers.

Pass ``--full`` for the fine discretization (about twenty seconds).
"""
from __future__ import annotations

import sys

import numpy as np

from hsie.fem import FeSpace
from hsie.hardy import HardyParams
from hsie.mesh import refine_uniform
from hsie.setups import (MC_OMEGA_GUESS, MC_OMEGA_REF, Discretization, build_system, bundled_microcavity,
                         kappa_to_omega, omega_to_kappa, solve_resonance)

full = "--full" in sys.argv
mesh = refine_uniform(bundled_microcavity(), 2 if full else 1)
space = FeSpace(mesh, 3)
sweep = list(range(2, 13)) + ([30, 40, 50] if full else [20])
shift = omega_to_kappa(MC_OMEGA_GUESS)

values = {}
for N in sweep:
    system = build_system(mesh, Discretization(3, HardyParams(5 + 3j, N)), space=space)
    res = solve_resonance(system, shift)
    values[N] = res.eigenvalues[0]
    shift = np.sqrt(values[N])

ref = values[sweep[-1]]
print(f"{'N':>3}  {'kappa^2':>32}  {'change vs N=' + str(sweep[-1]):>14}")
for N, lam in values.items():
    print(f"{N:3d}  {lam.real:15.10f}{lam.imag:+.10f}i  {abs(lam - ref) / abs(ref):14.2e}")

omega = kappa_to_omega(np.sqrt(ref))
print(f"\nomega = {omega.real:.6e} {omega.imag:+.6e}i rad/s, Q = {omega.real / (-2 * omega.imag):.0f}")
print(f"reference {MC_OMEGA_REF.real:.6e} {MC_OMEGA_REF.imag:+.6e}i, "
      f"relative difference {abs(omega - MC_OMEGA_REF) / abs(MC_OMEGA_REF):.2%}")
