from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hsie.errors import ConvergenceFailure, ResidualTooLarge, ShiftIsEigenvalue, SingularMatrix
from hsie.solvers import backward_error, eig_residual, lu_solve, shift_invert_eigs, start_vector


def _complex_symmetric(n, seed, density=0.05):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng, dtype=float)
    A = A + 1j * sp.random(n, n, density=density, random_state=rng, dtype=float)
    A = A + A.T + sp.eye(n) * (4 + 1j)
    return A.tocsr()


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 150), st.integers(0, 2**31))
def test_lu_solve_backward_error(n, seed):
    A = _complex_symmetric(n, seed)
    b = start_vector(n, seed)
    x = lu_solve(A, b)
    assert backward_error(A, x, b) <= 1e-10
    np.testing.assert_allclose(A @ x, b, atol=1e-8 * np.abs(b).max())


def test_lu_solve_dense_oracle():
    A = _complex_symmetric(60, 3).toarray()
    b = start_vector(60)
    np.testing.assert_allclose(lu_solve(A, b), np.linalg.solve(A, b), rtol=1e-10)


def test_lu_solve_singular():
    A = sp.csr_matrix(np.diag([1.0, 2.0, 0.0]))
    with pytest.raises((SingularMatrix, ResidualTooLarge)):
        lu_solve(A, np.ones(3))


def test_lu_solve_shape_mismatch():
    with pytest.raises(ValueError):
        lu_solve(sp.eye(3), np.ones(4))


def test_start_vector_deterministic():
    np.testing.assert_array_equal(start_vector(10), start_vector(10))
    assert not np.array_equal(start_vector(10), start_vector(10, seed=1))


def test_eigs_diagonal_oracle():
    n = 200
    lam = np.arange(1, n + 1) * (1 - 0.01j)
    S = sp.diags(lam * np.linspace(1, 2, n)).tocsr()
    M = sp.diags(np.linspace(1, 2, n)).tocsr()
    res = shift_invert_eigs(S, M, 10.2 - 0.1j, n_want=3)
    np.testing.assert_allclose(res.eigenvalues, lam[[9, 10, 8]], rtol=1e-12)
    assert np.all(res.residuals <= 1e-10)
    for k in range(3):
        assert eig_residual(S, M, res.eigenvalues[k], res.eigenvectors[:, k]) <= 1e-10


def test_eigs_complex_symmetric_against_dense():
    n = 80
    S = _complex_symmetric(n, 11, density=0.1)
    rng = np.random.default_rng(5)
    B = rng.standard_normal((n, n)) * 0.05
    M = sp.csr_matrix(np.eye(n) + B @ B.T)
    ref = np.linalg.eigvals(np.linalg.solve(M.toarray(), S.toarray()))
    shift = 4.5 + 1.2j
    res = shift_invert_eigs(S, M, shift, n_want=2)
    near = ref[np.argsort(np.abs(ref - shift))[:2]]
    np.testing.assert_allclose(res.eigenvalues, near, rtol=1e-10)


def test_eigs_small_dense_fallback():
    S = sp.diags([1.0, 2.0, 3.0, 4.0]).tocsr()
    res = shift_invert_eigs(S, sp.eye(4).tocsr(), 2.1)
    np.testing.assert_allclose(res.eigenvalues, [2.0])


def test_eigs_deterministic():
    S = _complex_symmetric(120, 2)
    M = sp.eye(120).tocsr()
    a = shift_invert_eigs(S, M, 4 + 1j, n_want=2)
    b = shift_invert_eigs(S, M, 4 + 1j, n_want=2)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)


def test_eigs_shift_on_eigenvalue():
    S = sp.diags(np.arange(1.0, 21.0)).tocsr()
    with pytest.raises(ShiftIsEigenvalue):
        shift_invert_eigs(S, sp.eye(20).tocsr(), 5.0)


def test_eigs_tolerance_failure():
    S = sp.diags(np.arange(1.0, 41.0)).tocsr()
    with pytest.raises(ConvergenceFailure):
        shift_invert_eigs(S, sp.eye(40).tocsr(), 5.5, tol=1e-30)


def test_eigs_timing_fields():
    S = sp.diags(np.arange(1.0, 41.0)).tocsr()
    res = shift_invert_eigs(S, sp.eye(40).tocsr(), 5.4)
    assert set(res.extra) == {"factorization_seconds", "arnoldi_seconds"}
    assert res.iterations > 0
