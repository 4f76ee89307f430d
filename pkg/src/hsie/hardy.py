"""
Hardy space operator matrices for the radial (infinite) direction.

A radial function on ``[0, inf)`` is represented through its Moebius-mapped
Laplace transform, an element of the Hardy space of the unit disk.  With the
decomposition ``u_hat = (1/(i k0)) T_-(u0, U)`` the discrete unknowns along
one ray are

    x = (u0, U_0, U_1, ..., U_N)

i.e. the boundary value ``u0`` followed by the ``N + 1`` monomial
coefficients of ``U`` in ``span{z^0, ..., z^N}``.  All matrices below act on
vectors of that length ``N + 2``.

Pairings are bilinear (plain transpose, never conjugate transpose), so every
assembled operator is complex symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularResolvent

__all__ = [
    "HardyParams",
    "make_T",
    "make_D",
    "make_resolvent",
    "hsm_stiffness_1d",
    "hsm_mass_1d",
    "hsm_mixed_1d",
    "reference_hardy_coefficients",
    "reference_U_coefficients",
    "space_basis",
]


@dataclass(frozen=True)
class HardyParams:
    """Tuning wavenumber ``kappa0`` and Hardy mode count ``n_modes``.

    ``n_modes = N`` gives ``N + 2`` unknowns per ray (boundary value plus
    ``N + 1`` Hardy coefficients).
    """

    kappa0: complex
    n_modes: int

    def __post_init__(self):
        k0 = complex(self.kappa0)
        if not np.isfinite(k0) or k0.real <= 0:
            raise ValueError(f"kappa0 must have positive real part, got {self.kappa0!r}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 0:
            raise ValueError(f"n_modes must be a nonnegative integer, got {self.n_modes!r}")
        object.__setattr__(self, "kappa0", k0)
        object.__setattr__(self, "n_modes", int(self.n_modes))

    @property
    def size(self) -> int:
        """Unknowns per ray including the boundary value."""
        return self.n_modes + 2

    def admits(self, kappa: complex) -> bool:
        """Whether ``kappa`` satisfies ``Re(kappa / kappa0) > 0``."""
        return (complex(kappa) / self.kappa0).real > 0


def make_T(n_modes: int, sign: int | str) -> np.ndarray:
    """Bidiagonal matrix of ``(u0, U) -> (u0 + (z +- 1) U) / 2``.

    Row/column 0 belongs to the boundary value; the result lives in
    ``Pi_{N+1}`` so the matrix is square of size ``n_modes + 2``.
    """
    s = _sign(sign)
    n = int(n_modes) + 2
    T = 0.5 * np.eye(n, dtype=complex)
    idx = np.arange(n - 1)
    T[idx, idx + 1] = 0.5 * s
    return T


def _sign(sign) -> float:
    if sign in ("+", 1, +1.0):
        return 1.0
    if sign in ("-", -1, -1.0):
        return -1.0
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def make_D(n_modes: int, kappa0: complex) -> np.ndarray:
    """Galerkin matrix of the Hardy-space image of multiplication by ``r``.

    ``(D F)(z) = ((z-1)^2 F'(z) + (z-1) F(z)) / (2 i kappa0)`` truncated to
    ``Pi_{n_modes}``; tridiagonal and symmetric with diagonal ``-(2j+1)`` and
    off-diagonal ``1, 2, ..., n_modes``.
    """
    n = int(n_modes) + 1
    j = np.arange(n)
    D = np.zeros((n, n), dtype=complex)
    D[j, j] = -(2 * j + 1)
    off = np.arange(1, n)
    D[off - 1, off] = off
    D[off, off - 1] = off
    return D / (2j * complex(kappa0))


def make_resolvent(n_modes: int, kappa0: complex, alpha: complex, beta: float) -> np.ndarray:
    """Return ``(alpha I + beta D)^{-1}`` for the truncated ``D`` of size ``n_modes + 1``.

    Raises
    ------
    SingularResolvent
        If an LU pivot drops below ``1e-12 * max|alpha I + beta D|``.
    """
    D = make_D(n_modes, kappa0)
    A = alpha * np.eye(D.shape[0], dtype=complex) + beta * D
    scale = np.abs(A).max()
    if scale == 0:
        raise SingularResolvent("alpha*I + beta*D vanishes identically")
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if np.abs(np.diag(lu)).min() < 1e-12 * scale:
        raise SingularResolvent(
            f"resolvent of D (n_modes={n_modes}, kappa0={kappa0}) is numerically singular "
            f"for alpha={alpha}, beta={beta}"
        )
    R = scipy.linalg.lu_solve((lu, piv), np.eye(D.shape[0], dtype=complex))
    # the exact inverse of a symmetric matrix is symmetric; remove rounding asymmetry
    return 0.5 * (R + R.T)


def hsm_stiffness_1d(p: HardyParams) -> np.ndarray:
    """``-2 i kappa0 T_+^T T_+``: radial ``int u' v' dr``."""
    Tp = make_T(p.n_modes, +1)
    return -2j * p.kappa0 * (Tp.T @ Tp)


def hsm_mass_1d(p: HardyParams) -> np.ndarray:
    """``(2i / kappa0) T_-^T T_-``: radial ``int u v dr``."""
    Tm = make_T(p.n_modes, -1)
    return (2j / p.kappa0) * (Tm.T @ Tm)


def hsm_mixed_1d(p: HardyParams) -> np.ndarray:
    """``-2 T_-^T T_+``: radial ``int u v' dr`` with ``u`` the row function.

    Its transpose is ``int u' v dr``.
    """
    Tp = make_T(p.n_modes, +1)
    Tm = make_T(p.n_modes, -1)
    return -2.0 * (Tm.T @ Tp)


def reference_hardy_coefficients(kappa: complex, p: HardyParams, u_boundary: complex) -> np.ndarray:
    """Exact monomial coefficients ``0..N`` of the transformed outgoing wave.

    For ``u(r) = u_boundary * exp(i kappa r)`` the coefficients form the
    geometric sequence ``u_boundary / (i (kappa + kappa0)) * q**j`` with
    ``q = (kappa - kappa0) / (kappa + kappa0)``.
    """
    kappa = complex(kappa)
    if not p.admits(kappa):
        raise ValueError("Re(kappa/kappa0) must be positive")
    k0 = p.kappa0
    q = (kappa - k0) / (kappa + k0)
    j = np.arange(p.n_modes + 1)
    return u_boundary / (1j * (kappa + k0)) * q**j


def reference_U_coefficients(kappa: complex, p: HardyParams, u_boundary: complex) -> np.ndarray:
    """Exact ``U`` part of the decomposition for an outgoing wave.

    Undoing ``u_hat = (u0 + (z - 1) U) / (2 i kappa0)`` for the geometric
    series gives ``U_j = u_boundary * q**(j+1)``, ``j = 0..N``.
    """
    kappa = complex(kappa)
    if not p.admits(kappa):
        raise ValueError("Re(kappa/kappa0) must be positive")
    q = (kappa - p.kappa0) / (kappa + p.kappa0)
    return u_boundary * q ** np.arange(1, p.n_modes + 2)


def space_basis(r, p: HardyParams, derivative: bool = False) -> np.ndarray:
    """Evaluate the ray basis functions in physical radial coordinates.

    Column 0 is ``exp(i k0 r)`` (the boundary-value function); column ``j+1``
    is the function belonging to ``U_j``::

        exp(i k0 r) * sum_{m=0}^{j} binom(j, m) (2 i k0 r)^(m+1) / (m+1)!

    Only used for verification; these functions decay when ``Im(k0) > 0``.

    Returns
    -------
    ndarray, shape ``(len(r), n_modes + 2)``
    """
    from scipy.special import comb, factorial

    r = np.asarray(r, dtype=float)
    k0 = p.kappa0
    t = 2j * k0 * r
    e = np.exp(1j * k0 * r)
    out = np.zeros(r.shape + (p.size,), dtype=complex)
    dout = np.zeros_like(out)
    out[..., 0] = e
    dout[..., 0] = 1j * k0 * e
    for j in range(p.n_modes + 1):
        poly = np.zeros_like(t)
        dpoly = np.zeros_like(t)
        for m in range(j + 1):
            c = comb(j, m, exact=True) / factorial(m + 1, exact=True)
            poly = poly + c * t ** (m + 1)
            # d/dr t^(m+1) = (m+1) * 2 i k0 * t^m
            dpoly = dpoly + c * (m + 1) * (2j * k0) * t**m
        out[..., j + 1] = e * poly
        dout[..., j + 1] = e * (dpoly + 1j * k0 * poly)
    return dout if derivative else out
