"""
High-order nodal finite elements on the interior triangulation.

Global DOF numbering: mesh vertices first, then ``p - 1`` nodes per mesh
edge (running from the lower to the higher vertex index), then the cell
interior nodes triangle by triangle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import gauss_legendre, lagrange_1d, triangle_basis, triangle_quadrature
from .errors import MissingMaterial
from .mesh import Mesh2D

_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def coo_to_csr(rows, cols, vals, shape) -> sp.csr_matrix:
    """Sum duplicate entries in input order and return a canonical CSR matrix.

    Entries with the same (row, col) are added in the order they appear, so
    the result does not depend on the sorting algorithm and a symmetric
    sequence of contributions yields an exactly symmetric matrix.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=complex)
    key = rows * shape[1] + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    vals = vals[order]
    if key.size == 0:
        return sp.csr_matrix(shape, dtype=complex)
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    summed = np.add.reduceat(vals, starts)
    ukey = key[starts]
    r, c = np.divmod(ukey, shape[1])
    indptr = np.searchsorted(r, np.arange(shape[0] + 1))
    return sp.csr_matrix((summed, c, indptr), shape=shape)


@dataclass
class FeSpace:
    """Continuous Lagrange space of order ``p`` on a triangulation."""

    mesh: Mesh2D
    order: int

    def __post_init__(self):
        p = self.order
        self.basis = triangle_basis(p)
        et = self.mesh.edge_triangle()
        self.edges = sorted(et)
        self.edge_index = {e: k for k, e in enumerate(self.edges)}
        nv = self.mesh.n_vertices
        ne = len(self.edges)
        nt = self.mesh.n_triangles
        n_in = self.basis.n_local - 3 - 3 * (p - 1)
        self.n_dofs = nv + ne * (p - 1) + nt * n_in
        cd = np.empty((nt, self.basis.n_local), dtype=np.int64)
        tris = self.mesh.triangles
        cd[:, :3] = tris
        for le, (a, b) in enumerate(_LOCAL_EDGES):
            loc = self.basis.edge_local[le][1:-1]
            for t in range(nt):
                va, vb = int(tris[t, a]), int(tris[t, b])
                k = self.edge_index[(min(va, vb), max(va, vb))]
                g = nv + k * (p - 1) + np.arange(p - 1)
                cd[t, loc] = g if va < vb else g[::-1]
        first_in = 3 + 3 * (p - 1)
        cd[:, first_in:] = nv + ne * (p - 1) + np.arange(nt)[:, None] * n_in + np.arange(n_in)[None, :]
        self.cell_dofs = cd
        # physical coordinates of every DOF
        v = self.mesh.vertices[tris]
        ref = self.basis.nodes
        phys = v[:, 0, None, :] + ref[None, :, 0, None] * (v[:, 1] - v[:, 0])[:, None, :] \
            + ref[None, :, 1, None] * (v[:, 2] - v[:, 0])[:, None, :]
        self.dof_coords = np.zeros((self.n_dofs, 2))
        self.dof_coords[cd.ravel()] = phys.reshape(-1, 2)
        self.dof_coords[:nv] = self.mesh.vertices

    def edge_dofs(self, va: int, vb: int) -> np.ndarray:
        """The ``p + 1`` global DOFs on mesh edge ``va -> vb``, in that direction."""
        p = self.order
        key = (min(va, vb), max(va, vb))
        k = self.edge_index[key]
        inner = self.mesh.n_vertices + k * (p - 1) + np.arange(p - 1)
        if va > vb:
            inner = inner[::-1]
        return np.concatenate([[va], inner, [vb]]).astype(np.int64)

    def interpolate(self, f) -> np.ndarray:
        """Nodal interpolant of ``f(x, y)`` (vectorized callable)."""
        c = self.dof_coords
        return np.asarray(f(c[:, 0], c[:, 1]), dtype=complex)

    def geometry(self):
        """Per-triangle Jacobians ``J`` (columns are edge vectors), determinants and inverses."""
        v = self.mesh.vertices[self.mesh.triangles]
        J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1] / det
        inv[:, 1, 1] = J[:, 0, 0] / det
        inv[:, 0, 1] = -J[:, 0, 1] / det
        inv[:, 1, 0] = -J[:, 1, 0] / det
        return J, det, inv


def _sym(A):
    return 0.5 * (A + A.T)


def reference_matrices(p: int):
    """``(M, Kxx, Kxy + Kyx, Kyy)`` on the unit triangle, exactly symmetric."""
    basis = triangle_basis(p)
    xq, wq = triangle_quadrature(p + 1)
    V, Dx, Dy = basis(xq)
    M = _sym((V * wq[:, None]).T @ V)
    Kxx = _sym((Dx * wq[:, None]).T @ Dx)
    Kyy = _sym((Dy * wq[:, None]).T @ Dy)
    Kxy = (Dx * wq[:, None]).T @ Dy
    return M, Kxx, Kxy + Kxy.T, Kyy


def element_matrices(space: FeSpace, coeff: np.ndarray):
    """Stacked element stiffness and ``coeff``-weighted mass matrices."""
    Mr, Kxx, Kxy, Kyy = reference_matrices(space.order)
    _, det, inv = space.geometry()
    adet = np.abs(det)
    # G = |det J| J^{-1} J^{-T}
    G00 = adet * (inv[:, 0, 0] ** 2 + inv[:, 0, 1] ** 2)
    G01 = adet * (inv[:, 0, 0] * inv[:, 1, 0] + inv[:, 0, 1] * inv[:, 1, 1])
    G11 = adet * (inv[:, 1, 0] ** 2 + inv[:, 1, 1] ** 2)
    K = G00[:, None, None] * Kxx + G01[:, None, None] * Kxy + G11[:, None, None] * Kyy
    M = (adet * coeff)[:, None, None] * Mr
    return K, M


def material_coefficients(mesh: Mesh2D, n_by_material=None) -> np.ndarray:
    table = mesh.materials if n_by_material is None else n_by_material
    try:
        return np.array([table[int(m)] for m in mesh.tri_material], dtype=complex)
    except KeyError as exc:
        raise MissingMaterial(f"no coefficient for material id {exc.args[0]}") from exc


def assemble_interior(space: FeSpace, n_by_material=None):
    """Global ``S_int = int grad u . grad v`` and ``M_int = int n u v``.

    Raises
    ------
    MissingMaterial
        A triangle's material id has no entry in ``n_by_material``.
    """
    coeff = material_coefficients(space.mesh, n_by_material)
    K, M = element_matrices(space, coeff)
    cd = space.cell_dofs
    nl = cd.shape[1]
    rows = np.repeat(cd, nl, axis=1).ravel()
    cols = np.tile(cd, (1, nl)).ravel()
    shape = (space.n_dofs, space.n_dofs)
    return coo_to_csr(rows, cols, K.ravel(), shape), coo_to_csr(rows, cols, M.ravel(), shape)


def edge_matrices(p: int, length: float = 1.0):
    """Physical edge matrices ``(B0, Sbd)``: ``int b_m b_n`` and ``int b_m' b_n'``."""
    x, w = gauss_legendre(p + 2)
    phi, dphi = lagrange_1d(p)(x)
    B0 = _sym((phi * w[:, None]).T @ phi)
    Sbd = _sym((dphi * w[:, None]).T @ dphi)
    return length * B0, Sbd / length


def trapezoid_trace_matrices(p: int, h_xi: float, a: float, b: float):
    """Reference-edge matrices ``(B0, B1, B2)`` over ``eta in [0, 1]``.

    ``B0 = int b_m b_n``, ``B1 = int b_m' w1 b_n'``, ``B2 = int b_m' w2 b_n`` with
    ``w1 = h_xi^2 + (b - (a+b) eta)^2`` and ``w2 = (b - (a+b) eta) / h_xi``.
    """
    x, w = gauss_legendre(p + 3)
    phi, dphi = lagrange_1d(p)(x)
    s = b - (a + b) * x
    w1 = h_xi**2 + s**2
    w2 = s / h_xi
    B0 = _sym((phi * w[:, None]).T @ phi)
    B1 = _sym((dphi * (w * w1)[:, None]).T @ dphi)
    B2 = (dphi * (w * w2)[:, None]).T @ phi
    return B0, B1, B2


def h1_error(space: FeSpace, x, u, grad_u, order_boost: int = 3):
    """Absolute H1 error of the FE function ``x`` and the H1 norm of ``u``.

    ``u(X, Y)`` and ``grad_u(X, Y) -> (ux, uy)`` are vectorized callables.
    """
    xq, wq = triangle_quadrature(space.order + order_boost)
    V, Dx, Dy = space.basis(xq)
    J, det, inv = space.geometry()
    v0 = space.mesh.vertices[space.mesh.triangles[:, 0]]
    P = v0[:, None, :] + np.einsum("tij,qj->tqi", J, xq)
    loc = np.asarray(x)[space.cell_dofs]
    uh = loc @ V.T
    gr = loc @ Dx.T, loc @ Dy.T
    # physical gradient: J^{-T} times reference gradient
    ghx = inv[:, 0, 0, None] * gr[0] + inv[:, 1, 0, None] * gr[1]
    ghy = inv[:, 0, 1, None] * gr[0] + inv[:, 1, 1, None] * gr[1]
    ue = u(P[..., 0], P[..., 1])
    gx, gy = grad_u(P[..., 0], P[..., 1])
    wt = np.abs(det)[:, None] * wq[None, :]
    err2 = np.sum(wt * (np.abs(uh - ue) ** 2 + np.abs(ghx - gx) ** 2 + np.abs(ghy - gy) ** 2))
    nrm2 = np.sum(wt * (np.abs(ue) ** 2 + np.abs(gx) ** 2 + np.abs(gy) ** 2))
    return float(np.sqrt(err2)), float(np.sqrt(nrm2))
