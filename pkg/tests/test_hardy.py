from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsie.errors import SingularResolvent
from hsie.hardy import (
    HardyParams,
    hsm_mass_1d,
    hsm_mixed_1d,
    hsm_stiffness_1d,
    make_D,
    make_resolvent,
    make_T,
    reference_hardy_coefficients,
    reference_U_coefficients,
    space_basis,
)

kappa0s = st.builds(complex, st.floats(0.1, 20.0), st.floats(-10.0, 10.0))
n_modes = st.integers(0, 50)


def test_T_small_examples():
    np.testing.assert_array_equal(make_T(1, "-"), 0.5 * np.array([[1, -1, 0], [0, 1, -1], [0, 0, 1]]))
    np.testing.assert_array_equal(make_T(0, "+"), 0.5 * np.array([[1, 1], [0, 1]]))
    np.testing.assert_array_equal(make_T(0, -1) @ np.array([3.0, 0.0]), [1.5, 0.0])


def test_T_rejects_bad_sign():
    with pytest.raises(ValueError):
        make_T(2, "x")


@given(n_modes)
def test_T_plus_minus_difference_is_superdiagonal(n):
    diff = make_T(n, "+") - make_T(n, "-")
    np.testing.assert_array_equal(diff, np.eye(n + 2, k=1))


def test_D_small_example():
    k0 = 3 + 1j
    expected = np.array([[-1, 1, 0], [1, -3, 2], [0, 2, -5]]) / (2j * k0)
    np.testing.assert_array_equal(make_D(2, k0), expected)


def test_D_first_column_is_image_of_constant():
    k0 = 2.0
    D = make_D(4, k0)
    np.testing.assert_array_equal(D[:, 0], np.array([-1, 1, 0, 0, 0]) / (2j * k0))


def _D_by_polynomials(n, k0):
    # Galerkin projection of ((z-1)^2 F' + (z-1) F) / (2 i k0) on monomials
    P = np.polynomial.polynomial
    out = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n + 1):
        F = np.zeros(j + 1)
        F[j] = 1.0
        img = P.polyadd(P.polymul([1, -2, 1], P.polyder(F)) if j else [0.0], P.polymul([-1, 1], F))
        img = np.pad(img, (0, n + 3))[: n + 1]
        out[:, j] = img / (2j * k0)
    return out


@given(st.integers(0, 30), kappa0s)
def test_D_matches_polynomial_action(n, k0):
    np.testing.assert_allclose(make_D(n, k0), _D_by_polynomials(n, k0), rtol=0, atol=1e-15 / abs(k0))


@given(n_modes, kappa0s)
def test_D_symmetric_tridiagonal(n, k0):
    D = make_D(n, k0)
    np.testing.assert_array_equal(D, D.T)
    np.testing.assert_array_equal(np.triu(D, 2), 0)


def test_resolvent_inverts():
    k0 = 8 + 5j
    R = make_resolvent(20, k0, 1.0, 0.3)
    A = np.eye(21) + 0.3 * make_D(20, k0)
    assert np.abs(R @ A - np.eye(21)).max() <= 1e-12
    assert np.abs(R - R.T).max() <= 1e-13 * np.abs(R).max()


def test_resolvent_beta_zero_is_scaled_identity():
    R = make_resolvent(5, 1 + 1j, 2 - 1j, 0.0)
    np.testing.assert_allclose(R, np.eye(6) / (2 - 1j), rtol=1e-15)


def test_resolvent_singular():
    k0 = 1.0
    # -1/(2i) is the 1x1 D; alpha = -beta D makes it vanish
    with pytest.raises(SingularResolvent):
        make_resolvent(0, k0, 1 / (2j), 1.0)


@settings(max_examples=40)
@given(st.integers(0, 40), kappa0s, st.floats(0.1, 5.0), st.floats(0.0, 3.0))
def test_resolvent_property(n, k0, alpha, beta):
    R = make_resolvent(n, k0, alpha, beta)
    A = alpha * np.eye(n + 1) + beta * make_D(n, k0)
    assert np.abs(R @ A - np.eye(n + 1)).max() <= 1e-10 * max(1.0, np.linalg.cond(A))
    np.testing.assert_array_equal(R, R.T)


def test_hsm_small_examples():
    k0 = 1.5 + 0.5j
    hp = HardyParams(k0, 0)
    np.testing.assert_allclose(hsm_stiffness_1d(hp), -(1j * k0 / 2) * np.array([[1, 1], [1, 2]]), rtol=1e-15)
    np.testing.assert_allclose(hsm_mass_1d(hp), (1j / (2 * k0)) * np.array([[1, -1], [-1, 2]]), rtol=1e-15)


def test_exact_robin_term_at_kappa0():
    k0 = 2.3
    hp = HardyParams(k0, 0)
    val = hsm_stiffness_1d(hp)[0, 0] - k0**2 * hsm_mass_1d(hp)[0, 0]
    assert abs(val - (-1j * k0)) <= 1e-15 * abs(k0)


@given(st.integers(0, 30), kappa0s)
def test_hsm_symmetric(n, k0):
    hp = HardyParams(k0, n)
    for A in (hsm_stiffness_1d(hp), hsm_mass_1d(hp)):
        np.testing.assert_array_equal(A, A.T)


def _radial_quadrature(k0, length=80.0, panels=400, order=12):
    x, w = np.polynomial.legendre.leggauss(order)
    h = length / panels
    left = np.arange(panels) * h
    r = (left[:, None] + 0.5 * h * (x[None, :] + 1)).ravel()
    return r, np.tile(0.5 * h * w, panels)


@pytest.mark.parametrize("N", [0, 1, 3, 5])
def test_hsm_matrices_match_physical_integrals(N):
    # basis functions decay for Im k0 > 0, so the half-line integrals converge
    hp = HardyParams(1.0 + 1.0j, N)
    r, w = _radial_quadrature(hp.kappa0)
    B = space_basis(r, hp)
    dB = space_basis(r, hp, derivative=True)
    S = (dB * w[:, None]).T @ dB
    M = (B * w[:, None]).T @ B
    L = (B * w[:, None]).T @ dB
    np.testing.assert_allclose(hsm_stiffness_1d(hp), S, atol=1e-10 * np.abs(S).max())
    np.testing.assert_allclose(hsm_mass_1d(hp), M, atol=1e-10 * np.abs(M).max())
    np.testing.assert_allclose(hsm_mixed_1d(hp), L, atol=1e-10 * np.abs(L).max())


def test_reference_coefficients_examples():
    hp = HardyParams(4.0, 6)
    c = reference_hardy_coefficients(2.0, hp, 1.0)
    np.testing.assert_allclose(c[1:] / c[:-1], -1 / 3, rtol=1e-14)
    c = reference_hardy_coefficients(4.0, hp, 2.0)
    np.testing.assert_allclose(c, [2 / (8j), 0, 0, 0, 0, 0, 0], atol=1e-16)


@given(st.builds(complex, st.floats(0.1, 10.0), st.floats(0.0, 5.0)), kappa0s, st.integers(1, 30))
def test_reference_coefficients_geometric(kappa, k0, n):
    hp = HardyParams(k0, n)
    if not hp.admits(kappa):
        return
    c = reference_hardy_coefficients(kappa, hp, 1.0)
    q = abs((kappa - hp.kappa0) / (kappa + hp.kappa0))
    assert q < 1
    nz = np.abs(c[:-1]) > 1e-250
    np.testing.assert_allclose(np.abs(c[1:][nz] / c[:-1][nz]), q, rtol=1e-14)


def test_reference_coefficients_inadmissible():
    with pytest.raises(ValueError):
        reference_hardy_coefficients(-2.0, HardyParams(1.0, 3), 1.0)


def test_U_coefficients_reproduce_transformed_series():
    kappa, hp = 2.0 + 0.5j, HardyParams(3.0 + 1.0j, 20)
    U = reference_U_coefficients(kappa, hp, 1.5)
    x = np.concatenate([[1.5], U])
    uhat = make_T(hp.n_modes, "-") @ x / (1j * hp.kappa0)
    c = reference_hardy_coefficients(kappa, hp, 1.5)
    # the degree N+1 entry is the truncation tail q^(N+1)
    np.testing.assert_allclose(uhat[:-1], c, atol=1e-15)


def test_bilinear_pairing_identity():
    kappa, k0 = 2 + 1j, 2.0
    hp = HardyParams(k0, 60)
    c = reference_hardy_coefficients(kappa, hp, 1.0)
    lhs = -1.0 / (2j * kappa)  # int_0^inf exp(2 i kappa r) dr
    rhs = -2j * k0 * np.sum(c * c)
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_params_validation():
    with pytest.raises(ValueError):
        HardyParams(-1.0, 2)
    with pytest.raises(ValueError):
        HardyParams(1.0, -1)
    assert HardyParams(1, 2).size == 4
