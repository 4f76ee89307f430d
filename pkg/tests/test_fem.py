from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hsie.basis import MAX_ORDER, gll_points, lagrange_1d, triangle_quadrature
from hsie.errors import MissingMaterial
from hsie.fem import (FeSpace, assemble_interior, coo_to_csr, edge_matrices, h1_error, reference_matrices,
                      trapezoid_trace_matrices)
from hsie.mesh import parse_mesh, rectangle_mesh, refine_uniform
from hsie.setups import microcavity_mesh

TRIANGLE = """mesh2d 1
mat 1 1.0
v 0 0
v 1 0
v 0 1
t 0 1 2 1
be 0 1 1
be 1 2 1
be 2 0 1
"""


def unit_square(n=1):
    xs = np.linspace(0, 1, n + 1)
    return rectangle_mesh(xs, xs, lambda x, y: 1, {1: 1.0})


def skewed_mesh():
    m = refine_uniform(microcavity_mesh(), 1)
    return m


def test_p1_unit_triangle_textbook():
    space = FeSpace(parse_mesh(TRIANGLE), 1)
    S, M = assemble_interior(space)
    np.testing.assert_allclose(S.toarray(), 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)
    np.testing.assert_allclose(M.toarray(), (0.5 / 12) * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]), atol=1e-16)


def test_coefficient_scaling():
    space = FeSpace(unit_square(2), 3)
    S1, M1 = assemble_interior(space, {1: 1.0})
    S2, M2 = assemble_interior(space, {1: 2.5})
    assert (S1 != S2).nnz == 0
    np.testing.assert_allclose(M2.toarray(), 2.5 * M1.toarray(), rtol=1e-15)
    with pytest.raises(MissingMaterial):
        assemble_interior(space, {2: 1.0})


@pytest.mark.parametrize("p", range(1, MAX_ORDER + 1))
def test_symmetry_and_constant_kernel(p):
    space = FeSpace(unit_square(1), p)
    S, M = assemble_interior(space)
    assert (S != S.T).nnz == 0 and (M != M.T).nnz == 0
    assert np.abs(S @ np.ones(space.n_dofs)).max() <= 1e-13 * abs(S).max()
    np.testing.assert_allclose(np.ones(space.n_dofs) @ M @ np.ones(space.n_dofs), 1.0, rtol=1e-13)


@pytest.mark.parametrize("p", range(1, MAX_ORDER + 1))
def test_reference_matrices_quadrature_exact(p):
    from hsie.basis import triangle_basis

    b = triangle_basis(p)
    xq, wq = triangle_quadrature(p + 6)
    V, Dx, Dy = b(xq)
    M, Kxx, Kxy, Kyy = reference_matrices(p)
    scale = np.abs(Kxx).max()
    np.testing.assert_allclose(M, (V * wq[:, None]).T @ V, atol=1e-13 * np.abs(M).max())
    np.testing.assert_allclose(Kxx, (Dx * wq[:, None]).T @ Dx, atol=1e-13 * scale)
    np.testing.assert_allclose(Kxy, (Dx * wq[:, None]).T @ Dy + (Dy * wq[:, None]).T @ Dx, atol=1e-13 * scale)
    np.testing.assert_allclose(Kyy, (Dy * wq[:, None]).T @ Dy, atol=1e-13 * scale)


@pytest.mark.parametrize("p", [1, 2, 4, 7])
def test_linear_function_energy(p):
    space = FeSpace(skewed_mesh(), p)
    S, M = assemble_interior(space)
    u = space.interpolate(lambda x, y: 2.0 * x - 3.0 * y + 0.5)
    area = space.mesh.areas().sum()
    energy = (u @ (S @ u)).real
    np.testing.assert_allclose(energy, 13.0 * area, rtol=1e-12)


@pytest.mark.parametrize("p", [1, 3, 5])
def test_trace_dofs_are_gll(p):
    space = FeSpace(skewed_mesh(), p)
    t = gll_points(p)
    for a, b in space.mesh.boundary_edges[:10]:
        d = space.edge_dofs(int(a), int(b))
        va, vb = space.mesh.vertices[a], space.mesh.vertices[b]
        np.testing.assert_allclose(space.dof_coords[d], va + t[:, None] * (vb - va), atol=1e-13)
        np.testing.assert_array_equal(space.edge_dofs(int(b), int(a)), d[::-1])


def test_dof_count_and_sharing():
    m = unit_square(2)
    p = 4
    space = FeSpace(m, p)
    ne = len(space.edges)
    assert space.n_dofs == m.n_vertices + ne * (p - 1) + m.n_triangles * (p - 1) * (p - 2) // 2
    assert np.array_equal(np.unique(space.cell_dofs), np.arange(space.n_dofs))


def test_edge_matrices_p1():
    B0, Sbd = edge_matrices(1, 1.0)
    np.testing.assert_allclose(B0, np.array([[2, 1], [1, 2]]) / 6, atol=1e-16)
    np.testing.assert_allclose(Sbd, [[1, -1], [-1, 1]], atol=1e-15)
    B0, Sbd = edge_matrices(1, 2.0)
    np.testing.assert_allclose(B0, np.array([[2, 1], [1, 2]]) / 3, atol=1e-15)
    np.testing.assert_allclose(Sbd, 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-15)


def _weighted_reference(p, h_xi, a, b):
    x, w = np.polynomial.legendre.leggauss(30)
    x, w = 0.5 * (x + 1), 0.5 * w
    phi, dphi = lagrange_1d(p)(x)
    s = b - (a + b) * x
    B0 = (phi * w[:, None]).T @ phi
    B1 = (dphi * (w * (h_xi**2 + s**2))[:, None]).T @ dphi
    B2 = (dphi * (w * s / h_xi)[:, None]).T @ phi
    return B0, B1, B2


@settings(max_examples=30)
@given(st.integers(1, MAX_ORDER), st.floats(0.2, 3.0), st.floats(-1.0, 2.0), st.floats(-1.0, 2.0))
def test_trapezoid_trace_matrices_quadrature(p, h_xi, a, b):
    got = trapezoid_trace_matrices(p, h_xi, a, b)
    ref = _weighted_reference(p, h_xi, a, b)
    for G, R in zip(got, ref):
        np.testing.assert_allclose(G, R, atol=1e-13 * max(1.0, np.abs(R).max()))


def test_trapezoid_trace_rectangle_degeneracy():
    B0, B1, B2 = trapezoid_trace_matrices(3, 1.7, 0.0, 0.0)
    B0e, Sbd = edge_matrices(3, 1.0)
    np.testing.assert_allclose(B1, 1.7**2 * Sbd, rtol=1e-13, atol=1e-13)
    assert np.all(B2 == 0)
    np.testing.assert_allclose(B0, B0e, atol=1e-15)


def test_symmetric_trapezoid_b2_centrosymmetric():
    # eta -> 1 - eta reverses the basis and flips both b' and w2
    B0, B1, B2 = trapezoid_trace_matrices(4, 1.0, 0.6, 0.6)
    np.testing.assert_allclose(B2[::-1, ::-1], B2, atol=1e-14)
    assert np.abs(B2).max() > 0.1


def test_coo_to_csr_matches_scipy_and_is_symmetric():
    # local symmetric blocks scattered like element assembly
    rng = np.random.default_rng(0)
    n = 30
    rows, cols, vals = [], [], []
    for _ in range(60):
        g = rng.choice(n, size=4, replace=False)
        A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        A = A + A.T
        rows.append(np.repeat(g, 4))
        cols.append(np.tile(g, 4))
        vals.append(A.ravel())
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    C = coo_to_csr(rows, cols, vals, (n, n))
    B = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    np.testing.assert_allclose(C.toarray(), B.toarray(), atol=1e-13)
    assert (C != C.T).nnz == 0
    assert C.has_canonical_format


def test_h1_error_exact_for_polynomials():
    p = 3
    space = FeSpace(skewed_mesh(), p)
    f = lambda x, y: x**3 - 2 * x * y**2 + y + 1j * x**2
    g = lambda x, y: (3 * x**2 - 2 * y**2 + 2j * x, -4 * x * y + 1.0 + 0 * x)
    err, nrm = h1_error(space, space.interpolate(f), f, g)
    assert err <= 1e-11 * nrm


def test_h1_error_converges_at_order_p():
    f = lambda x, y: np.sin(3 * x) * np.cos(2 * y)
    g = lambda x, y: (3 * np.cos(3 * x) * np.cos(2 * y), -2 * np.sin(3 * x) * np.sin(2 * y))
    for p in (1, 2, 3):
        errs = []
        for n in (4, 8):
            space = FeSpace(unit_square(n), p)
            errs.append(h1_error(space, space.interpolate(f), f, g)[0])
        rate = np.log2(errs[0] / errs[1])
        assert abs(rate - p) < 0.3
