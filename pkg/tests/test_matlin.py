import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hpd, random_unitary
from regcov.exceptions import DomainError, ValidationError
from regcov.matlin import (
    as_hermitian,
    convergence_residual,
    eigh,
    expm_herm,
    inv_sqrt_psd,
    sqrt_pair,
    sqrt_psd,
)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_eigh_identity():
    lam, U = eigh(np.eye(3))
    np.testing.assert_array_equal(lam, [1, 1, 1])
    np.testing.assert_allclose(U @ U.conj().T, np.eye(3), atol=1e-14)


def test_eigh_diagonal_sorted():
    lam, U = eigh(np.diag([3.0, 1.0]))
    np.testing.assert_array_equal(lam, [1.0, 3.0])
    np.testing.assert_array_equal(np.abs(U), [[0, 1], [1, 0]])


@pytest.mark.parametrize("complex_", [True, False])
def test_eigh_reconstruction(rng, complex_):
    H = random_hpd(rng, 4, complex_)
    lam, U = eigh(H)
    assert np.all(np.diff(lam) >= 0)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(4), atol=1e-10)
    assert rel((U * lam) @ U.conj().T, H) < 1e-10


def test_eigh_deterministic(rng):
    H = random_hpd(rng, 5)
    a, b = eigh(H), eigh(H.copy())
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_small_asymmetry_absorbed():
    M = np.array([[2.0, 1.0], [1.0 + 1e-15, 2.0]])
    out = as_hermitian(M)
    assert out[0, 1] == out[1, 0]


def test_eigh_matches_characteristic_roots():
    # 2x2: l = (a+c)/2 -+ sqrt(((a-c)/2)^2 + |b|^2)
    a, b, c = 3.0, 1.0 - 2.0j, -1.0
    m = (a + c) / 2
    r = np.sqrt(((a - c) / 2) ** 2 + abs(b) ** 2)
    lam, _ = eigh(np.array([[a, b], [np.conj(b), c]]))
    np.testing.assert_allclose(lam, [m - r, m + r], atol=1e-9)
    # 3x3 diagonal-plus-rank-one with known roots: J - I has eigenvalues (-1, -1, 2)
    lam, _ = eigh(np.ones((3, 3)) - np.eye(3))
    np.testing.assert_allclose(lam, [-1, -1, 2], atol=1e-9)


def test_sqrt_simple_cases():
    np.testing.assert_allclose(sqrt_psd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)
    np.testing.assert_allclose(inv_sqrt_psd(np.eye(2)), np.eye(2))
    np.testing.assert_allclose(inv_sqrt_psd(np.array([[4.0]])), [[0.5]])


@pytest.mark.parametrize("complex_", [True, False])
def test_sqrt_self_consistency(rng, complex_):
    H = random_hpd(rng, 6, complex_)
    S = sqrt_psd(H)
    Si = inv_sqrt_psd(H)
    assert rel(S @ S, H) < 1e-10
    assert np.linalg.norm(Si @ H @ Si - np.eye(6)) < 1e-10
    assert rel(Si, np.linalg.inv(S)) < 1e-10
    np.testing.assert_array_equal(S, S.conj().T)
    assert np.all(np.linalg.eigvalsh(S) > 0)
    half, ihalf = sqrt_pair(H)
    assert rel(half, S) < 1e-12 and rel(ihalf, Si) < 1e-12


def test_sqrt_rejects_indefinite():
    with pytest.raises(DomainError):
        sqrt_psd(np.diag([1.0, -1.0]))
    with pytest.raises(DomainError):
        inv_sqrt_psd(np.diag([1.0, 0.0]))


def test_expm_cases(rng):
    np.testing.assert_allclose(expm_herm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(expm_herm(np.diag([np.log(2.0), 0.0])), np.diag([2.0, 1.0]), atol=1e-15)
    A = random_hpd(rng, 4) - 1.5 * np.eye(4)
    assert np.linalg.norm(expm_herm(A) @ expm_herm(-A) - np.eye(4)) < 1e-9


def test_expm_matches_scipy(rng):
    from scipy.linalg import expm

    A = random_hpd(rng, 5) - np.eye(5)
    assert rel(expm_herm(A), expm(A)) < 1e-12


def test_expm_unitary_equivariance(rng):
    A = random_hpd(rng, 4) - np.eye(4)
    U = random_unitary(rng, 4)
    lhs = expm_herm(U @ A @ U.conj().T)
    rhs = U @ expm_herm(A) @ U.conj().T
    assert np.linalg.norm(lhs - rhs) < 1e-10 * np.linalg.norm(rhs)


def test_residual_cases(rng):
    H = random_hpd(rng, 4)
    assert convergence_residual(H, H) == pytest.approx(0.0, abs=1e-24)
    for d, c in [(3, 2.0), (5, 0.5)]:
        assert convergence_residual(np.eye(d), c * np.eye(d)) == pytest.approx(d * (c - 1) ** 2)


def test_residual_matches_trace_definition(rng):
    A, B = random_hpd(rng, 4), random_hpd(rng, 4)
    M = np.linalg.solve(A, B) - np.eye(4)
    assert convergence_residual(A, B) == pytest.approx(np.trace(M @ M).real, rel=1e-10)


def test_residual_first_order(rng):
    H = random_hpd(rng, 4)
    E = random_hpd(rng, 4) - np.eye(4)
    dE = 1e-5 * E
    expected = np.trace(np.linalg.solve(H, dE) @ np.linalg.solve(H, dE)).real
    assert convergence_residual(H, H + dE) == pytest.approx(expected, rel=0.1)


def test_residual_dimension_mismatch():
    with pytest.raises(ValidationError):
        convergence_residual(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1e-2))
def test_residual_positive_off_equality(seed, size):
    rng = np.random.default_rng(seed)
    H = random_hpd(rng, 3)
    E = random_hpd(rng, 3)
    E = E / np.linalg.norm(E)
    assert convergence_residual(H, H + size * E) > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.booleans())
def test_sqrt_properties(seed, d, complex_):
    rng = np.random.default_rng(seed)
    H = random_hpd(rng, d, complex_)
    S = sqrt_psd(H)
    assert rel(S @ S, H) < 1e-10
    assert rel(inv_sqrt_psd(H), np.linalg.inv(S)) < 1e-10
