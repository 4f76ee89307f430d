"""
Sparse direct solves and shift-invert eigenpairs for ``S x = lam M x``.

HSIE discretizations are complex symmetric but not Hermitian, so the
eigensolver runs plain Arnoldi (ARPACK) on the operator
``(S - sigma M)^{-1} M`` with the standard Euclidean inner product and maps
the Ritz values back by ``lam = sigma + 1/theta``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, ResidualTooLarge, ShiftIsEigenvalue, SingularMatrix

log = logging.getLogger(__name__)

START_VECTOR_SEED = 0x48534945
PIVOT_THRESHOLD = 1e-3
ORDERING = "MMD_AT_PLUS_A"
# smallest |U_ii| / largest |U_ii| accepted as nonsingular
PIVOT_RATIO_MIN = 1e-13


def as_sparse(A) -> sp.csr_matrix:
    """Complex CSR copy with sorted, summed indices."""
    A = sp.csr_matrix(A, dtype=complex)
    A.sum_duplicates()
    A.sort_indices()
    return A


def factorize(A):
    """Sparse LU with minimum-degree ordering on ``A + A^T``."""
    A = sp.csc_matrix(A, dtype=complex)
    try:
        return spla.splu(A, permc_spec=ORDERING, diag_pivot_thresh=PIVOT_THRESHOLD,
                         options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SingularMatrix(f"sparse LU failed: {exc}") from exc


def backward_error(A, x, b) -> float:
    """Normwise relative residual ``|b - Ax| / (|A| |x| + |b|)`` in the inf-norm."""
    r = b - A @ x
    anorm = spla.norm(A, np.inf) if sp.issparse(A) else np.linalg.norm(A, np.inf)
    denom = anorm * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0)
    if denom == 0:
        return 0.0
    return float(np.abs(r).max() / denom)


def lu_solve(A, b, tol: float = 1e-10, max_refine: int = 3, lu=None) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU with up to ``max_refine`` refinement steps.

    Raises
    ------
    SingularMatrix
        The factorization hit an exactly singular pivot, a pivot ratio below
        ``PIVOT_RATIO_MIN`` or produced non-finite values.
    ResidualTooLarge
        The backward error stays above ``tol`` after refinement.
    """
    A = as_sparse(A)
    b = np.asarray(b, dtype=complex)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    if lu is None:
        lu = factorize(A)
    piv = np.abs(lu.U.diagonal())
    if piv.size and piv.min() < PIVOT_RATIO_MIN * piv.max():
        # backward-stable solves keep small residuals even at exact singularity
        raise SingularMatrix(f"pivot ratio {piv.min() / piv.max():.2e}; matrix is numerically singular")
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("non-finite solution; matrix is numerically singular")
    err = backward_error(A, x, b)
    steps = 0
    while err > tol and steps < max_refine:
        x = x + lu.solve(b - A @ x)
        err = backward_error(A, x, b)
        steps += 1
    if err > tol:
        raise ResidualTooLarge(f"relative residual {err:.3e} exceeds {tol:.1e} after {steps} refinements")
    return x


@dataclass
class EigResult:
    """Eigenpairs nearest to the shift, ordered by distance to it."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    shift: complex
    extra: dict = field(default_factory=dict)


def start_vector(n: int, seed: int = START_VECTOR_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def eig_residual(S, M, lam, x, s_norm=None, m_norm=None) -> float:
    """Backward error ``|S x - lam M x| / ((|S|_1 + |lam| |M|_1) |x|)``."""
    if s_norm is None:
        s_norm = spla.norm(S, 1)
    if m_norm is None:
        m_norm = spla.norm(M, 1)
    r = S @ x - lam * (M @ x)
    return float(np.linalg.norm(r) / ((s_norm + abs(lam) * m_norm) * np.linalg.norm(x)))


def shift_invert_eigs(S, M, shift: complex, n_want: int = 1, tol: float = 1e-10,
                      ncv: int | None = None, maxiter: int | None = None,
                      polish_steps: int = 2) -> EigResult:
    """Eigenvalues of ``S x = lam M x`` nearest ``shift``.

    Parameters
    ----------
    S, M
        Square sparse matrices of equal size.
    shift
        Target ``sigma``; ``S - sigma M`` must be nonsingular.
    n_want
        Number of eigenpairs returned.
    tol
        Bound on the backward error of each returned pair (see ``eig_residual``).
    polish_steps
        Inverse-iteration steps with the existing factorization, applied to
        the pair nearest the shift.  Every pair's eigenvalue is then replaced
        by the transpose-based Rayleigh quotient ``x^T S x / x^T M x``.
    """
    S = as_sparse(S)
    M = as_sparse(M)
    n = S.shape[0]
    shift = complex(shift)
    if n_want < 1:
        raise ValueError("n_want must be positive")
    t0 = time.perf_counter()
    try:
        lu = factorize(S - shift * M)
    except SingularMatrix as exc:
        raise ShiftIsEigenvalue(f"S - sigma M is singular at sigma={shift}") from exc
    t_fact = time.perf_counter() - t0

    counter = {"matvec": 0}

    def op(x):
        counter["matvec"] += 1
        return lu.solve(M @ x)

    if n <= max(2 * n_want + 2, 8):
        # too small for ARPACK; dense fallback on the same operator
        A = lu.solve((M @ np.eye(n, dtype=complex)))
        theta, vecs = np.linalg.eig(A)
    else:
        OP = spla.LinearOperator((n, n), matvec=op, dtype=complex)
        if ncv is None:
            ncv = min(n - 1, max(2 * n_want + 1, 20))
        try:
            theta, vecs = spla.eigs(OP, k=n_want, which="LM", v0=start_vector(n), ncv=ncv,
                                    tol=tol * 1e-2, maxiter=maxiter or 100 * n)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(f"Arnoldi did not converge: {exc}") from exc
    keep = np.abs(theta) > 0
    theta, vecs = theta[keep], vecs[:, keep]
    lam = shift + 1.0 / theta
    order = np.lexsort((lam.imag, lam.real, np.round(np.abs(lam - shift), 12)))[:n_want]
    lam, vecs = lam[order], vecs[:, order]

    s_norm = spla.norm(S, 1)
    m_norm = spla.norm(M, 1)
    res = np.empty(len(lam))
    for k in range(len(lam)):
        x = vecs[:, k]
        # inverse iteration at a fixed shift drifts towards the nearest pair
        for _ in range(polish_steps if k == 0 else 0):
            y = lu.solve(M @ x)
            x = y / np.linalg.norm(y)
        lam[k] = (x @ (S @ x)) / (x @ (M @ x))
        # fix the phase so the largest component is real positive
        j = np.argmax(np.abs(x))
        x = x * (abs(x[j]) / x[j])
        vecs[:, k] = x / np.linalg.norm(x)
        res[k] = eig_residual(S, M, lam[k], vecs[:, k], s_norm, m_norm)
    if np.any(res > tol):
        raise ConvergenceFailure(f"eigenpair residuals {res} exceed tolerance {tol:.1e}")
    log.debug("shift-invert: %d operator applications", counter["matvec"])
    return EigResult(eigenvalues=lam, eigenvectors=vecs, residuals=res,
                     iterations=counter["matvec"], shift=shift,
                     extra={"factorization_seconds": t_fact, "arnoldi_seconds": time.perf_counter() - t0 - t_fact})
