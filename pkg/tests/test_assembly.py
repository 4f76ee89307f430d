from __future__ import annotations

import dataclasses
import random

import numpy as np
import pytest

from hsie.assembly import (CORNER_TOL, IncomingField, apply_incoming, assemble_global, build_dof_map, inflow_edges,
                           incoming_from_field)
from hsie.errors import InconsistentRays, MissingTraceData
from hsie.fem import FeSpace, h1_error
from hsie.hardy import HardyParams
from hsie.mesh import STRATEGIES, build_segmentation, rectangle_mesh
from hsie.setups import (WG_HALF_WIDTH, WG_KAPPA, WG_N1, WG_N2, Discretization, build_system, solve_resonance,
                         solve_scattering, straight_waveguide_mesh)
from hsie.waveguide import ModeField, solve_slab_mode


def square(n=4, half=1.0):
    xs = np.linspace(-half, half, n + 1)
    return rectangle_mesh(xs, xs, lambda x, y: 2 if max(abs(x), abs(y)) < 0.5 * half else 1, {1: 1.0, 2: 4.0})


@pytest.fixture(scope="module")
def waveguide():
    mode = solve_slab_mode(WG_KAPPA, WG_HALF_WIDTH, WG_N1, WG_N2)
    return straight_waveguide_mesh(nx=4), ModeField(mode)


@pytest.mark.parametrize("p,N", [(1, 0), (2, 3), (4, 5)])
def test_dof_counts_trapezoids(p, N):
    mesh = square(4)
    space = FeSpace(mesh, p)
    dm = build_dof_map(space, build_segmentation(mesh), HardyParams(2.0, N))
    nb = 16
    assert dm.n_fe == space.n_dofs
    assert dm.n_ray == nb * (N + 1)
    assert dm.n_edge_hardy == nb * (N + 1) * (p - 1)
    assert dm.n_corner == 0
    assert dm.counts()["total"] == dm.n_total == dm.n_fe + dm.n_exterior


def test_dof_counts_strips_and_triangles():
    p, N = 3, 4
    mesh = square(4)
    space = FeSpace(mesh, p)
    dm = build_dof_map(space, build_segmentation(mesh, "strips_and_triangles"), HardyParams(2.0, N))
    # one ray per straight vertex, two per corner
    assert dm.n_ray == (16 + 4) * (N + 1)
    assert dm.n_corner == 4 * (N + 1) ** 2
    assert dm.n_edge_hardy == 16 * (N + 1) * (p - 1)


def test_global_indices_cover_range_once_per_owner():
    mesh = square(3)
    space = FeSpace(mesh, 3)
    dm = build_dof_map(space, build_segmentation(mesh, "strips_and_triangles"), HardyParams(2.0, 2))
    used = np.unique(np.concatenate(dm.local_to_global))
    ext = used[used >= dm.n_fe]
    np.testing.assert_array_equal(ext, np.arange(dm.n_fe, dm.n_total))
    for g in dm.local_to_global:
        assert len(np.unique(g)) == len(g)


def test_inconsistent_rays():
    mesh = square(2)
    space = FeSpace(mesh, 2)
    segs = build_segmentation(mesh)
    bad = dataclasses.replace(segs[0], rays=segs[0].rays * np.array([[1.0], [1.5]]))
    with pytest.raises(InconsistentRays):
        build_dof_map(space, [bad] + segs[1:], HardyParams(2.0, 2))


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_assembly_independent_of_segment_order(strategy):
    mesh = square(3)
    space = FeSpace(mesh, 3)
    segs = build_segmentation(mesh, strategy, p0=(0.1, 0.05))
    hp = HardyParams(3 + 2j, 4)
    a = assemble_global(space, segs, hp=hp)
    shuffled = list(segs)
    random.Random(7).shuffle(shuffled)
    b = assemble_global(space, shuffled, hp=hp)
    for X, Y in ((a.S, b.S), (a.M, b.M)):
        np.testing.assert_array_equal(X.indptr, Y.indptr)
        np.testing.assert_array_equal(X.indices, Y.indices)
        np.testing.assert_array_equal(X.data, Y.data)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_global_matrices_symmetric(strategy):
    mesh = square(3)
    s = build_system(mesh, Discretization(3, HardyParams(3 + 2j, 5), strategy=strategy, p0=(0.1, 0.05)))
    for X in (s.S, s.M):
        scale = abs(X).max()
        assert abs(X - X.T).max() <= 1e-13 * scale
    assert s.operator(2.0).shape == (s.n_dofs, s.n_dofs)


def test_assemble_requires_hardy_params():
    mesh = square(2)
    with pytest.raises(ValueError):
        assemble_global(FeSpace(mesh, 1), build_segmentation(mesh))


def test_strategies_agree_on_resonance():
    # homogeneous exterior: every segmentation discretizes the same problem
    lams = []
    for strategy in STRATEGIES:
        disc = Discretization(6, HardyParams(3 + 2j, 16), strategy=strategy, p0=(0.1, 0.05))
        s = build_system(square(8), disc)
        lams.append(solve_resonance(s, 3.2 - 0.3j).eigenvalues[0])
    lams = np.array(lams)
    assert np.abs(lams - lams[0]).max() <= 1e-8 * abs(lams[0])
    assert lams[0].imag < 0


def test_incoming_from_field_samples_inflow(waveguide):
    mesh, fld = waveguide
    s = build_system(mesh, Discretization(2, HardyParams(5 + 5j, 2)))
    edges = inflow_edges(s)
    assert len(edges) == len(np.unique(mesh.vertices[mesh.vertices[:, 0] == 0.0][:, 1])) - 1
    for _, v1, v2, nrm in edges:
        assert v1[0] == v2[0] == 0.0
        np.testing.assert_allclose(nrm, [-1.0, 0.0], atol=1e-15)
    inc = incoming_from_field(s, fld)
    assert set(inc.edges) == {e[0] for e in edges}
    key = edges[0][0]
    gD, gN = inc.get(*key)
    gDr, gNr = inc.get(key[1], key[0])
    np.testing.assert_array_equal(gDr, gD[::-1])
    assert inc.get(-1, -2) is None


def _data(s, fld):
    inc = incoming_from_field(s, fld)
    return inc, next(iter(inc.edges))


def test_apply_incoming_errors(waveguide):
    mesh, fld = waveguide
    s = build_system(mesh, Discretization(2, HardyParams(5 + 5j, 2)))
    inc, key = _data(s, fld)
    missing = IncomingField({k: v for k, v in inc.edges.items() if k != key})
    with pytest.raises(MissingTraceData, match="no trace data"):
        apply_incoming(s, missing, WG_KAPPA)
    extra = IncomingField(dict(inc.edges))
    extra.edges[(10**6, 10**6 + 1)] = inc.edges[key]
    with pytest.raises(MissingTraceData, match="without inflow"):
        apply_incoming(s, extra, WG_KAPPA)
    short = IncomingField(dict(inc.edges))
    short.edges[key] = (inc.edges[key][0][:-1], inc.edges[key][1][:-1])
    with pytest.raises(MissingTraceData, match="values"):
        apply_incoming(s, short, WG_KAPPA)
    # constant data does not vanish where the inflow side meets transparent sides
    const = IncomingField({k: (np.ones(3, complex), np.zeros(3, complex)) for k in inc.edges})
    with pytest.raises(MissingTraceData, match="corner"):
        apply_incoming(s, const, WG_KAPPA)


def test_apply_incoming_corner_tolerance(waveguide):
    mesh, fld = waveguide
    s = build_system(mesh, Discretization(2, HardyParams(5 + 5j, 2)))
    inc, _ = _data(s, fld)
    tiny = IncomingField({k: (gD + 0.5 * CORNER_TOL, gN) for k, (gD, gN) in inc.edges.items()})
    rhs = apply_incoming(s, tiny, WG_KAPPA)
    assert np.all(np.isfinite(rhs)) and np.abs(rhs).max() > 0


def test_no_inflow_gives_zero_rhs():
    mesh = square(2)
    s = build_system(mesh, Discretization(2, HardyParams(2.0, 2)))
    assert np.all(apply_incoming(s, IncomingField(), 1.0) == 0)


def test_waveguide_pass_through_converges(waveguide):
    mesh, fld = waveguide
    errs = []
    for N in (1, 3, 6):
        s = build_system(mesh, Discretization(4, HardyParams(5 + 5j, N)))
        x = solve_scattering(s, WG_KAPPA, fld)
        e, nrm = h1_error(s.space, x[:s.space.n_dofs], fld, fld.gradient)
        errs.append(e / nrm)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-2
