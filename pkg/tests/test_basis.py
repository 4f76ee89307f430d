from __future__ import annotations

from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hsie.basis import MAX_ORDER, gauss_legendre, gll_points, lagrange_1d, triangle_basis, triangle_quadrature

orders = st.integers(1, MAX_ORDER)


def test_gll_known_values():
    np.testing.assert_allclose(gll_points(1), [0, 1])
    np.testing.assert_allclose(gll_points(2), [0, 0.5, 1])
    s = 1 / np.sqrt(5)
    np.testing.assert_allclose(gll_points(3), [0, (1 - s) / 2, (1 + s) / 2, 1], atol=1e-15)
    with pytest.raises(ValueError):
        gll_points(0)


@given(orders)
def test_gll_symmetric(p):
    t = gll_points(p)
    # exact on [-1, 1]; the affine map to [0, 1] rounds
    np.testing.assert_allclose(t, 1.0 - t[::-1], rtol=0, atol=2e-16)


@given(st.integers(1, 12), st.integers(0, 23))
def test_gauss_legendre_exactness(n, k):
    x, w = gauss_legendre(n)
    if k <= 2 * n - 1:
        assert abs(w @ x**k - 1 / (k + 1)) <= 1e-14


@given(orders)
def test_lagrange_1d_nodal_and_derivative(p):
    b = lagrange_1d(p)
    V, dV = b(b.nodes)
    np.testing.assert_allclose(V, np.eye(p + 1), atol=1e-12)
    # derivative reproduces that of x^p
    x = np.linspace(0, 1, 7)
    _, d = b(x)
    np.testing.assert_allclose(d @ b.nodes**p, p * x ** (p - 1), atol=1e-10)


@given(st.integers(1, 10), st.integers(0, 19), st.integers(0, 19))
def test_triangle_quadrature_exactness(n, a, c):
    if a + c > 2 * n - 1:
        return
    pts, w = triangle_quadrature(n)
    exact = factorial(a) * factorial(c) / factorial(a + c + 2)
    assert abs(w @ (pts[:, 0] ** a * pts[:, 1] ** c) - exact) <= 1e-14


@pytest.mark.parametrize("p", range(1, MAX_ORDER + 1))
def test_triangle_basis_nodal(p):
    tb = triangle_basis(p)
    assert tb.n_local == (p + 1) * (p + 2) // 2
    V, Dx, Dy = tb(tb.nodes)
    np.testing.assert_allclose(V, np.eye(tb.n_local), atol=1e-10)
    np.testing.assert_allclose(tb.nodes[:3], [[0, 0], [1, 0], [0, 1]], atol=1e-15)


@pytest.mark.parametrize("p", range(1, MAX_ORDER + 1))
def test_triangle_edges_are_gll(p):
    tb = triangle_basis(p)
    t = gll_points(p)
    corners = np.array([[0, 0], [1, 0], [0, 1]], float)
    for (a, b), loc in zip(((0, 1), (1, 2), (2, 0)), tb.edge_local):
        expect = corners[a] + t[:, None] * (corners[b] - corners[a])
        np.testing.assert_allclose(tb.nodes[loc], expect, atol=1e-12)


@pytest.mark.parametrize("p", range(1, MAX_ORDER + 1))
def test_triangle_basis_reproduces_polynomials(p):
    tb = triangle_basis(p)
    rng = np.random.default_rng(p)
    pts = rng.dirichlet([1, 1, 1], size=20)[:, 1:]
    V, Dx, Dy = tb(pts)
    n = tb.nodes
    for a in range(p + 1):
        for c in range(p + 1 - a):
            f = n[:, 0] ** a * n[:, 1] ** c
            np.testing.assert_allclose(V @ f, pts[:, 0] ** a * pts[:, 1] ** c, atol=1e-10)
            fx = a * pts[:, 0] ** max(a - 1, 0) * pts[:, 1] ** c if a else 0 * pts[:, 0]
            fy = c * pts[:, 0] ** a * pts[:, 1] ** max(c - 1, 0) if c else 0 * pts[:, 0]
            np.testing.assert_allclose(Dx @ f, fx, atol=1e-9)
            np.testing.assert_allclose(Dy @ f, fy, atol=1e-9)


def test_triangle_basis_order_limit():
    with pytest.raises(ValueError):
        triangle_basis(MAX_ORDER + 1)
