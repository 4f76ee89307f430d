"""
Geometries of the two model problems and the 2D solve drivers.

Lengths of the micro-cavity are in micrometers.  Material values are
Helmholtz coefficients, i.e. squared refractive indices.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .assembly import GlobalSystem, apply_incoming, assemble_global, incoming_from_field
from .errors import ResidualTooLarge, SingularSystem
from .fem import FeSpace
from .hardy import HardyParams
from .mesh import TAG_INFLOW, TAG_TRANSPARENT, Mesh2D, build_segmentation, load_mesh, rectangle_mesh, refine_uniform
from .solvers import lu_solve, shift_invert_eigs

SPEED_OF_LIGHT = 299792458.0

# straight slab waveguide test
WG_KAPPA = 2 * np.pi / 1.5
WG_HALF_WIDTH = 0.0365
WG_N1 = 1.45
WG_N2 = 3.4

# micro-cavity layout
MC_BOX = (3.5, 4.546)
MC_CAVITY = 1.451
MC_GAP = 0.2745
MC_GUIDE_WIDTH = 0.073
MC_OMEGA_REF = 1.1951173e15 - 1.489202e13j
MC_OMEGA_GUESS = 1.195e15 - 0.01489e15j
MC_LENGTH_UNIT_M = 1e-6


def _graded(half, fine, core, ratio, core_rows=1):
    """Symmetric grid lines on ``[-half, half]``, ``core_rows`` cells across ``[-core, core]``."""
    pos = [core]
    h = fine
    x = core
    while x + h < half - 0.5 * h:
        x += h
        pos.append(x)
        h *= ratio
    pos.append(half)
    pos = np.array(pos)
    inner = np.linspace(-core, core, core_rows + 1)[1:-1]
    return np.concatenate([-pos[::-1], inner, pos])


def straight_waveguide_mesh(length=1.0, half_height=4.0, a=WG_HALF_WIDTH, n1=WG_N1, n2=WG_N2,
                            nx=16, fine=0.05, ratio=1.3, core_rows=2) -> Mesh2D:
    """Rectangle ``[0, length] x [-half_height, half_height]`` around a slab core ``|y| < a``.

    The left side carries the inflow tag; all other sides are transparent.
    """
    xs = np.linspace(0.0, length, nx + 1)
    ys = _graded(half_height, fine, a, ratio, core_rows)
    mats = {1: n1**2, 2: n2**2}

    def material(xc, yc):
        return 2 if abs(yc) < a else 1

    def tag(xm, ym, outer):
        return TAG_INFLOW if abs(xm) < 1e-12 else TAG_TRANSPARENT

    return rectangle_mesh(xs, ys, material, mats, tag)


def microcavity_mesh(gap=MC_GAP, guide_width=MC_GUIDE_WIDTH) -> Mesh2D:
    """Coarse structured mesh of the cavity coupled to two horizontal waveguides.

    Centered box of size ``MC_BOX``, square cavity of side ``MC_CAVITY`` at the
    origin, guides of width ``MC_GUIDE_WIDTH`` at distance ``MC_GAP`` above and
    below the cavity.  Material 1 is the background, 2 the high-index parts.
    """
    W, H = MC_BOX
    c = 0.5 * MC_CAVITY
    g0 = c + gap
    g1 = g0 + guide_width
    xs = np.array([-W / 2, -W / 2 + 0.5 * (W / 2 - c), -c, -c / 2, 0.0, c / 2, c,
                   W / 2 - 0.5 * (W / 2 - c), W / 2])
    top = 0.5 * H
    ys_pos = [0.0, c / 2, c, 0.5 * (c + g0), g0, g1, g1 + (top - g1) / 3, g1 + 2 * (top - g1) / 3, top]
    ys = np.unique(np.concatenate([-np.array(ys_pos[::-1]), np.array(ys_pos)]))
    mats = {1: WG_N1**2, 2: WG_N2**2}

    def material(xc, yc):
        if abs(xc) < c and abs(yc) < c:
            return 2
        if g0 < abs(yc) < g1:
            return 2
        return 1

    return rectangle_mesh(xs, ys, material, mats)


def bundled_microcavity() -> Mesh2D:
    """The shipped coarse micro-cavity mesh file."""
    with resources.as_file(resources.files("hsie") / "data" / "microcavity.mesh") as path:
        return load_mesh(path)


def omega_to_kappa(omega, length_unit_m=MC_LENGTH_UNIT_M):
    return complex(omega) / SPEED_OF_LIGHT * length_unit_m


def kappa_to_omega(kappa, length_unit_m=MC_LENGTH_UNIT_M):
    return complex(kappa) * SPEED_OF_LIGHT / length_unit_m


@dataclass
class Discretization:
    """Interior order, refinements, exterior segmentation and Hardy parameters."""

    fe_order: int
    hardy: HardyParams
    refinements: int = 0
    strategy: str = "trapezoids_normal_bisector"
    p0: tuple | None = None
    resolvent_pad: int = 0
    timings: dict = field(default_factory=dict)


def build_system(mesh: Mesh2D, disc: Discretization, space: FeSpace | None = None) -> GlobalSystem:
    t0 = time.perf_counter()
    if space is None:
        fine = refine_uniform(mesh, disc.refinements) if disc.refinements else mesh
        space = FeSpace(fine, disc.fe_order)
    segs = build_segmentation(space.mesh, disc.strategy, p0=disc.p0)
    system = assemble_global(space, segs, hp=disc.hardy, resolvent_pad=disc.resolvent_pad)
    disc.timings["assembly"] = time.perf_counter() - t0
    return system


def solve_scattering(system: GlobalSystem, kappa, incoming, timings=None) -> np.ndarray:
    """Solve ``(S - kappa^2 M) x = rhs`` for the incoming field ``incoming``.

    ``incoming`` is an :class:`~hsie.assembly.IncomingField` or a field object
    with ``__call__`` and ``gradient`` that is sampled on the inflow edges.
    """
    t0 = time.perf_counter()
    if not hasattr(incoming, "edges"):
        incoming = incoming_from_field(system, incoming)
    rhs = apply_incoming(system, incoming, kappa)
    A = system.operator(kappa)
    try:
        x = lu_solve(A, rhs, tol=1e-10)
    except ResidualTooLarge as exc:
        raise SingularSystem(f"scattering system at kappa={kappa} is (nearly) singular") from exc
    if timings is not None:
        timings["solve"] = time.perf_counter() - t0
    return x


def solve_resonance(system: GlobalSystem, shift_kappa, n_want=1, tol=1e-10, timings=None):
    """Eigenpairs ``kappa^2`` nearest ``shift_kappa**2``."""
    t0 = time.perf_counter()
    res = shift_invert_eigs(system.S, system.M, complex(shift_kappa) ** 2, n_want=n_want, tol=tol)
    if timings is not None:
        timings["eigensolve"] = time.perf_counter() - t0
    return res
