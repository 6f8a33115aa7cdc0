import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import linalg

from entropy_tomography.designs import PAULI, basis_matrix_completion
from entropy_tomography.hermitian import (
    DomainError,
    as_hermitian,
    eig_hermitian,
    from_spectrum,
    hs_inner,
    matrix_func,
    op_norm,
    random_hermitian,
    schatten_norm,
    tensor_product,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 8)


def test_eig_identity_and_diagonal():
    sp = eig_hermitian(np.eye(3))
    np.testing.assert_allclose(sp.eigenvalues, [1, 1, 1])
    sp = eig_hermitian(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(sp.eigenvalues, [3, 1])
    np.testing.assert_allclose(np.abs(sp.eigenvectors), [[0, 1], [1, 0]])


def test_eig_reconstructs(rng):
    a = random_hermitian(6, rng)
    sp = eig_hermitian(a)
    np.testing.assert_allclose(from_spectrum(sp.eigenvalues, sp.eigenvectors), a, atol=1e-10)
    assert np.all(np.diff(sp.eigenvalues) <= 0)


def test_eig_deterministic(rng):
    a = random_hermitian(5, rng)
    s1, s2 = eig_hermitian(a), eig_hermitian(a.copy())
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    assert np.array_equal(s1.eigenvectors, s2.eigenvectors)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError, match="not Hermitian"):
        as_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_matrix_func_examples():
    np.testing.assert_allclose(matrix_func(np.zeros((3, 3)), "exp"), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(matrix_func(np.eye(3), "log"), np.zeros((3, 3)), atol=1e-14)
    m = 4
    xl = matrix_func(np.eye(m) / m, "xlogx")
    np.testing.assert_allclose(xl, -np.log(m) / m * np.eye(m), atol=1e-14)
    assert np.trace(xl).real == pytest.approx(-np.log(m))


def test_matrix_func_domain_errors():
    with pytest.raises(DomainError, match="-1"):
        matrix_func(np.diag([1.0, -1.0]), "log")
    with pytest.raises(DomainError):
        matrix_func(np.diag([1.0, -0.5]), "sqrt")


def test_matrix_func_matches_scipy(rng):
    a = random_hermitian(5, rng)
    np.testing.assert_allclose(matrix_func(a, "exp"), linalg.expm(a), atol=1e-10)
    p = a @ a + np.eye(5)
    np.testing.assert_allclose(matrix_func(p, "log"), linalg.logm(p), atol=1e-9)
    np.testing.assert_allclose(matrix_func(p, "sqrt"), linalg.sqrtm(p), atol=1e-9)


def test_schatten_examples(rng):
    assert schatten_norm(np.eye(5), 1) == pytest.approx(5)
    w = PAULI / np.sqrt(2)
    for x in w:
        assert schatten_norm(x, 2) == pytest.approx(1.0)
        assert schatten_norm(x, np.inf) == pytest.approx(2**-0.5)
    a = random_hermitian(5, rng)
    assert schatten_norm(a, 1) == pytest.approx(np.abs(linalg.eigvalsh(a)).sum(), rel=1e-12)
    assert schatten_norm(a, 2) == pytest.approx(np.linalg.norm(a, "fro"), rel=1e-10)


def test_hs_inner_examples(rng):
    assert hs_inner(np.eye(4), np.eye(4)) == pytest.approx(4)
    e = basis_matrix_completion(3)
    assert hs_inner(e[0], e[4]) == pytest.approx(0, abs=1e-15)
    a, b = random_hermitian(4, rng), random_hermitian(4, rng)
    assert hs_inner(a, b) == pytest.approx(np.sum(a * b.conj()).real, rel=1e-12)
    with pytest.raises(ValueError):
        hs_inner(np.eye(2), np.eye(3))


def test_tensor_product_examples(rng):
    np.testing.assert_array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    a, b = random_hermitian(3, rng), random_hermitian(2, rng)
    assert op_norm(tensor_product(a, b)) == pytest.approx(op_norm(a) * op_norm(b), rel=1e-10)
    w1 = PAULI[0] / np.sqrt(2)
    assert op_norm(tensor_product(w1, w1)) == pytest.approx(0.5)


@given(seeds, dims)
def test_golden_thompson(seed, m):
    g = np.random.default_rng(seed)
    a, b = random_hermitian(m, g), random_hermitian(m, g)
    lhs = np.trace(matrix_func(a + b, "exp")).real
    rhs = np.trace(matrix_func(a, "exp") @ matrix_func(b, "exp")).real
    assert lhs <= rhs * (1 + 1e-8)


@given(seeds, dims)
def test_norm_ordering(seed, m):
    a = random_hermitian(m, np.random.default_rng(seed))
    assert schatten_norm(a, np.inf) <= schatten_norm(a, 2) * (1 + 1e-12) <= schatten_norm(a, 1) * (1 + 1e-12)


@given(seeds, dims)
def test_exp_log_roundtrip(seed, m):
    g = np.random.default_rng(seed)
    a = random_hermitian(m, g)
    a = 5.0 * a / max(op_norm(a), 1e-12)
    np.testing.assert_allclose(matrix_func(matrix_func(a, "exp"), "log"), a, atol=1e-8)


@given(seeds, dims)
def test_hs_inner_is_frobenius_sq(seed, m):
    a = random_hermitian(m, np.random.default_rng(seed))
    assert hs_inner(a, a) == pytest.approx(schatten_norm(a, 2) ** 2, rel=1e-10)
