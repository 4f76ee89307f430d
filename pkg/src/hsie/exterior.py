"""
Local matrices of the exterior infinite elements.

All local matrices use radial-major ordering.  For strips and trapezoids
the local index of (radial ``i``, trace ``m``) is ``i * (p + 1) + m``; the
block ``i = 0`` holds the boundary trace.  For infinite triangles the local
index of (radial ``i`` along ``n1``, radial ``j`` along ``n2``) is
``i * (N + 2) + j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCorner
from .fem import edge_matrices, trapezoid_trace_matrices
from .hardy import HardyParams, hsm_mass_1d, hsm_mixed_1d, hsm_stiffness_1d, make_D, make_resolvent, make_T


@dataclass
class ExteriorElementMatrices:
    """``S`` and ``M`` over the local DOFs listed in ``dofs``.

    ``dofs[l]`` is ``(i, m)``: radial index and trace index for edge
    segments, or the two radial indices for infinite triangles.
    """

    kind: str
    S: np.ndarray
    M: np.ndarray
    dofs: list

    @property
    def size(self):
        return len(self.dofs)


def _sym(A):
    return 0.5 * (A + A.T)


def _edge_dofs(hp: HardyParams, p: int):
    return [(i, m) for i in range(hp.size) for m in range(p + 1)]


def strip_matrices(B0, Sbd, hp: HardyParams, n_seg) -> ExteriorElementMatrices:
    """``S = S_hsm x B0 + M_hsm x Sbd`` and ``M = n_seg M_hsm x B0`` for a rectangular strip.

    ``B0`` and ``Sbd`` are the physical edge matrices; the ray has unit speed.
    """
    Sh = hsm_stiffness_1d(hp)
    Mh = hsm_mass_1d(hp)
    S = np.kron(Sh, B0) + np.kron(Mh, Sbd)
    M = n_seg * np.kron(Mh, B0)
    return ExteriorElementMatrices("strip", _sym(S), _sym(M), _edge_dofs(hp, B0.shape[0] - 1))


def trapezoid_radial(hp: HardyParams, h_eta, h_xi, a, b, pad: int = 0):
    """Radial matrices ``(M_xi, L00, L01, L10, L11)`` of an infinite trapezoid.

    ``pad`` enlarges the Hardy space in which ``(h_eta I + (a+b) D)^{-1}`` is
    formed before restricting; ``pad = 0`` inverts on the image space of ``T``.
    """
    N = hp.n_modes
    k0 = hp.kappa0
    Tm = make_T(N, -1)
    Tp = make_T(N, +1)
    n = N + 2
    A = h_eta * np.eye(n) + (a + b) * make_D(N + 1, k0)
    R = make_resolvent(N + 1 + pad, k0, h_eta, a + b)[:n, :n]
    M_xi = (2j * h_xi / k0) * (Tm.T @ A @ Tm)
    L00 = (2j / (k0 * h_xi)) * (Tm.T @ R @ Tm)
    L01 = hsm_mixed_1d(hp)
    L11 = (-2j * k0 / h_xi) * (Tp.T @ A @ Tp)
    return _sym(M_xi), _sym(L00), L01, L01.T.copy(), _sym(L11)


def trapezoid_matrices(h_eta, h_xi, a, b, B0, B1, B2, hp: HardyParams, n_seg,
                       pad: int = 0) -> ExteriorElementMatrices:
    """Local matrices of an infinite trapezoid.

    ``B0, B1, B2`` are the reference-edge matrices of
    :func:`hsie.fem.trapezoid_trace_matrices` for the same ``(h_xi, a, b)``.

    Raises
    ------
    SingularResolvent
        ``h_eta I + (a+b) D`` is numerically singular.
    """
    M_xi, L00, L01, L10, L11 = trapezoid_radial(hp, h_eta, h_xi, a, b, pad)
    S = np.kron(L00, B1) + np.kron(L01, B2) + np.kron(L10, B2.T) + np.kron(L11, B0)
    M = n_seg * np.kron(M_xi, B0)
    return ExteriorElementMatrices("trapezoid", _sym(S), _sym(M), _edge_dofs(hp, B0.shape[0] - 1))


def corner_metric(n1, n2):
    """``(G, |det J|)`` with ``J = [n1 n2]`` and ``G = |J| J^{-1} J^{-T}``."""
    J = np.column_stack([np.asarray(n1, float), np.asarray(n2, float)])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    if abs(det) < 1e-12:
        raise DegenerateCorner(f"corner rays are (nearly) parallel: det J = {det:.3e}")
    Jinv = np.linalg.inv(J)
    G = abs(det) * (Jinv @ Jinv.T)
    G = 0.5 * (G + G.T)
    return G, abs(det)


def triangle_matrices(n1, n2, hp: HardyParams, n_seg) -> ExteriorElementMatrices:
    """Local matrices of the infinite triangle spanned by ``n1`` and ``n2`` at a corner.

    ``S = G11 S_h x M_h + G12 (K01 x K10 + K10 x K01) + G22 M_h x S_h`` with the
    mixed matrix ``K01 = int u v'``, and ``M = n_seg |J| M_h x M_h``.
    """
    G, adet = corner_metric(n1, n2)
    Sh = hsm_stiffness_1d(hp)
    Mh = hsm_mass_1d(hp)
    K01 = hsm_mixed_1d(hp)
    K10 = K01.T
    S = G[0, 0] * np.kron(Sh, Mh) + G[1, 1] * np.kron(Mh, Sh)
    if G[0, 1] != 0.0:
        S = S + G[0, 1] * (np.kron(K01, K10) + np.kron(K10, K01))
    M = n_seg * adet * np.kron(Mh, Mh)
    dofs = [(i, j) for i in range(hp.size) for j in range(hp.size)]
    return ExteriorElementMatrices("inf_triangle", _sym(S), _sym(M), dofs)


def segment_matrices(seg, fe_order: int, hp: HardyParams, n_seg, pad: int = 0) -> ExteriorElementMatrices:
    """Dispatch on ``seg.kind``."""
    if seg.kind == "strip":
        B0, Sbd = edge_matrices(fe_order, seg.h_eta)
        return strip_matrices(B0, Sbd, hp, n_seg)
    if seg.kind == "trapezoid":
        B0, B1, B2 = trapezoid_trace_matrices(fe_order, seg.h_xi, seg.a, seg.b)
        return trapezoid_matrices(seg.h_eta, seg.h_xi, seg.a, seg.b, B0, B1, B2, hp, n_seg, pad)
    if seg.kind == "inf_triangle":
        return triangle_matrices(seg.rays[0], seg.rays[1], hp, n_seg)
    raise ValueError(f"unknown segment kind {seg.kind!r}")


def strip_dtn_values(kappa, kappa0, n_modes: int, fe_order: int, edge_length: float, modes):
    """Discrete DtN values of a strip on transverse eigendirections.

    A single edge element of order ``fe_order`` and length ``edge_length``
    (natural ends) carries the trace.  For each index in ``modes`` the
    generalized eigenvector ``Sbd v = mu B0 v`` is fed to the Schur
    complement of ``S - kappa^2 M`` onto the trace.  The exact value is
    ``-i sqrt(kappa^2 - mu)`` (branch with ``Im >= 0`` inside the root).

    Returns
    -------
    mu, schur, exact : ndarray
    """
    import scipy.linalg

    kappa = complex(kappa)
    hp = HardyParams(kappa0, n_modes)
    B0, Sbd = edge_matrices(fe_order, edge_length)
    em = strip_matrices(B0, Sbd, hp, 1.0)
    A = em.S - kappa**2 * em.M
    t = fe_order + 1
    Att, Ate, Aee = A[:t, :t], A[:t, t:], A[t:, t:]
    schur = Att - Ate @ np.linalg.solve(Aee, Ate.T)
    mu_all, V = scipy.linalg.eigh(Sbd, B0)
    idx = np.asarray(modes, dtype=int)
    mu = mu_all[idx]
    V = V[:, idx]
    # B0-orthonormal eigenvectors: v^T B0 v = 1
    vals = np.einsum("im,ij,jm->m", V, schur, V)
    exact = -1j * np.sqrt(kappa**2 - mu + 0j)
    return mu, vals, exact
