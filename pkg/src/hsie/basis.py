"""Nodal Lagrange bases and quadrature on the unit interval and unit triangle."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import eval_jacobi, roots_jacobi

MAX_ORDER = 7


def gauss_legendre(n: int):
    """``n``-point Gauss rule on [0, 1]; exact for degree ``2n - 1``."""
    x, w = npleg.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gll_points(p: int) -> np.ndarray:
    """Gauss-Lobatto-Legendre points on [0, 1] (``p + 1`` points, symmetric)."""
    if p < 1:
        raise ValueError("order must be >= 1")
    if p == 1:
        t = np.array([-1.0, 1.0])
    else:
        inner, _ = roots_jacobi(p - 1, 1.0, 1.0)
        t = np.concatenate([[-1.0], np.sort(inner), [1.0]])
    # enforce exact symmetry
    t = 0.5 * (t - t[::-1])
    return 0.5 * (t + 1.0)


def _legvander_unit(x, deg):
    """Legendre Vandermonde in ``2x - 1`` and its x-derivative."""
    t = 2.0 * np.asarray(x, dtype=float) - 1.0
    V = npleg.legvander(t, deg)
    dV = np.zeros_like(V)
    for k in range(1, deg + 1):
        c = np.zeros(k + 1)
        c[k] = 1.0
        dV[..., k] = 2.0 * npleg.legval(t, npleg.legder(c))
    return V, dV


class LagrangeBasis1D:
    """Nodal basis of degree ``p`` on the GLL points of [0, 1]."""

    def __init__(self, p: int):
        self.p = p
        self.nodes = gll_points(p)
        V, _ = _legvander_unit(self.nodes, p)
        self._coef = np.linalg.inv(V)

    def __call__(self, x):
        V, dV = _legvander_unit(x, self.p)
        return V @ self._coef, dV @ self._coef


@lru_cache(maxsize=None)
def lagrange_1d(p: int) -> LagrangeBasis1D:
    return LagrangeBasis1D(p)


def triangle_quadrature(n: int):
    """Collapsed (conical product) rule on the unit triangle.

    Uses ``n`` Gauss-Legendre points times ``n`` Gauss-Jacobi(1, 0) points;
    exact for polynomials of total degree ``2n - 1``.  Returns points
    ``(m, 2)`` and weights summing to 1/2.
    """
    u, wu = gauss_legendre(n)
    t, wt = roots_jacobi(n, 1.0, 0.0)
    v = 0.5 * (t + 1.0)
    wv = 0.25 * wt
    U, Vv = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = U * (1.0 - Vv)
    return np.column_stack([x.ravel(), Vv.ravel()]), W.ravel()


_WARP_ALPHA = [0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
               1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258]


def _warp_factor(p, rout):
    # 1D warp from equidistant to GLL points, divided by the blend denominator
    r_gll = 2.0 * gll_points(p) - 1.0
    r_eq = np.linspace(-1.0, 1.0, p + 1)
    Veq = npleg.legvander(r_eq, p)
    Pmat = npleg.legvander(rout, p).T
    Lmat = np.linalg.solve(Veq.T, Pmat)
    warp = Lmat.T @ (r_gll - r_eq)
    interior = np.abs(rout) < 1.0 - 1e-10
    sf = 1.0 - (interior * rout) ** 2
    return warp / sf + warp * (interior - 1.0)


@lru_cache(maxsize=None)
def triangle_nodes(p: int) -> np.ndarray:
    """Warp-and-blend nodes on the unit triangle ``(0,0), (1,0), (0,1)``.

    Edge nodes coincide with the GLL points, so traces of the nodal basis are
    exactly the 1D GLL Lagrange basis.
    """
    alpha = _WARP_ALPHA[p - 1] if p <= len(_WARP_ALPHA) else 5.0 / 3.0
    L1, L3 = [], []
    for n in range(p + 1):
        for m in range(p + 1 - n):
            L1.append(n / p)
            L3.append(m / p)
    L1 = np.array(L1)
    L3 = np.array(L3)
    L2 = 1.0 - L1 - L3
    X = -L2 + L3
    Y = (-L2 - L3 + 2.0 * L1) / np.sqrt(3.0)
    b1, b2, b3 = 4 * L2 * L3, 4 * L1 * L3, 4 * L1 * L2
    w1 = b1 * _warp_factor(p, L3 - L2) * (1 + (alpha * L1) ** 2)
    w2 = b2 * _warp_factor(p, L1 - L3) * (1 + (alpha * L2) ** 2)
    w3 = b3 * _warp_factor(p, L2 - L1) * (1 + (alpha * L3) ** 2)
    X = X + w1 + np.cos(2 * np.pi / 3) * w2 + np.cos(4 * np.pi / 3) * w3
    Y = Y + np.sin(2 * np.pi / 3) * w2 + np.sin(4 * np.pi / 3) * w3
    # equilateral -> barycentric -> unit triangle
    l1 = (np.sqrt(3.0) * Y + 1.0) / 3.0
    l2 = (-3.0 * X - np.sqrt(3.0) * Y + 2.0) / 6.0
    l3 = (3.0 * X - np.sqrt(3.0) * Y + 2.0) / 6.0
    r = -l2 + l3 - l1
    s = -l2 - l3 + l1
    pts = np.column_stack([0.5 * (r + 1.0), 0.5 * (s + 1.0)])
    pts[np.abs(pts) < 1e-14] = 0.0
    return pts


def _tri_vander(pts, p):
    """Orthogonal (Dubiner) polynomials of total degree <= p, with gradients."""
    x, y = pts[:, 0], pts[:, 1]
    omy = 1.0 - y
    top = omy < 1e-14
    a = np.where(top, -1.0, 2.0 * x / np.where(top, 1.0, omy) - 1.0)
    b = 2.0 * y - 1.0
    V, Dx, Dy = [], [], []
    for i in range(p + 1):
        Pi = eval_jacobi(i, 0, 0, a)
        dPi = 0.5 * (i + 1) * eval_jacobi(i - 1, 1, 1, a) if i > 0 else np.zeros_like(a)
        for j in range(p + 1 - i):
            Qj = eval_jacobi(j, 2 * i + 1, 0, b)
            dQj = 0.5 * (j + 2 * i + 2) * eval_jacobi(j - 1, 2 * i + 2, 1, b) if j > 0 else np.zeros_like(b)
            V.append(Pi * omy**i * Qj)
            if i == 0:
                Dx.append(np.zeros_like(x))
                Dy.append(2.0 * dQj)
            else:
                w = omy ** (i - 1)
                Dx.append(2.0 * dPi * w * Qj)
                Dy.append(w * (dPi * (1.0 + a) - i * Pi) * Qj + 2.0 * Pi * omy**i * dQj)
    return np.column_stack(V), np.column_stack(Dx), np.column_stack(Dy)


class TriangleBasis:
    """Nodal Lagrange basis of degree ``p`` on the unit triangle.

    Local node order: the three vertices, then the ``p - 1`` nodes of each
    edge (0-1, 1-2, 2-0) running from the first to the second vertex, then
    the interior nodes.
    """

    def __init__(self, p: int):
        if not 1 <= p <= MAX_ORDER:
            raise ValueError(f"order must be in [1, {MAX_ORDER}], got {p}")
        self.p = p
        raw = triangle_nodes(p)
        order, self.edge_local = _classify_nodes(raw, p)
        self.nodes = raw[order]
        V, _, _ = _tri_vander(self.nodes, p)
        self._coef = np.linalg.inv(V)
        self.n_local = len(self.nodes)

    def __call__(self, pts):
        V, Dx, Dy = _tri_vander(np.atleast_2d(pts), self.p)
        return V @ self._coef, Dx @ self._coef, Dy @ self._coef


def _classify_nodes(pts, p):
    tol = 1e-10
    lam = np.column_stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]])
    verts = [int(np.argmin(np.linalg.norm(pts - v, axis=1))) for v in ([0, 0], [1, 0], [0, 1])]
    order = list(verts)
    edge_local = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        c = 3 - a - b
        on = [k for k in range(len(pts)) if abs(lam[k, c]) < tol and k not in verts]
        # parameter along the edge from vertex a to vertex b
        on.sort(key=lambda k: lam[k, b])
        start = len(order)
        order.extend(on)
        edge_local.append([a] + list(range(start, start + len(on))) + [b])
    seen = set(order)
    order.extend(k for k in range(len(pts)) if k not in seen)
    assert len(order) == len(pts) and all(len(e) == p + 1 for e in edge_local)
    return np.array(order), [np.array(e) for e in edge_local]


@lru_cache(maxsize=None)
def triangle_basis(p: int) -> TriangleBasis:
    return TriangleBasis(p)
