import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import csr_matrix, diags, eye as speye, random as sparse_random

from dlekrylov.dense import frob_norm
from dlekrylov.problems import heat_fem_matrices
from dlekrylov.sparsela import (CapabilityError, Factorization,
                                FactorizationError, operator_from_pair,
                                sparse_apply, sparse_factor, wrap_dense,
                                wrap_sparse)


def test_sparse_apply_identity_and_zero():
    rng = np.random.default_rng(0)
    V = rng.standard_normal((6, 3))
    np.testing.assert_array_equal(sparse_apply(csr_matrix(np.eye(6)), V), V)
    np.testing.assert_array_equal(
        sparse_apply(csr_matrix((6, 6)), V), np.zeros((6, 3)))


def test_sparse_apply_matches_dense():
    rng = np.random.default_rng(1)
    A = csr_matrix(sparse_random(100, 100, density=0.05, random_state=7))
    V = rng.standard_normal((100, 4))
    np.testing.assert_allclose(sparse_apply(A, V), A.toarray() @ V, rtol=1e-13)


def test_sparse_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        sparse_apply(csr_matrix(np.eye(4)), np.ones((5, 2)))


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=2, max_value=200), st.integers(min_value=0, max_value=2**31))
def test_sparse_apply_dense_agreement_property(n, seed):
    rng = np.random.default_rng(seed)
    A = csr_matrix(sparse_random(n, n, density=min(1.0, 5.0 / n),
                                 random_state=seed % 2**31))
    V = rng.standard_normal((n, 2))
    np.testing.assert_allclose(sparse_apply(A, V), A.toarray() @ V,
                               atol=1e-13 * max(1.0, frob_norm(A.toarray())))


def test_factor_diagonal_is_division():
    d = np.array([2.0, -4.0, 0.5])
    f = sparse_factor(csr_matrix(np.diag(d)))
    V = np.array([[2.0], [8.0], [1.0]])
    np.testing.assert_allclose(f.solve(V), V / d[:, None], rtol=1e-14)


def test_factor_tridiagonal_residual():
    n = 200
    A = csr_matrix(diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)],
                         [-1, 0, 1]))
    f = sparse_factor(A)
    rng = np.random.default_rng(2)
    V = rng.standard_normal((n, 3))
    X = f.solve(V)
    assert frob_norm(A @ X - V) <= 1e-12 * frob_norm(V)


def test_factor_zero_row_names_row():
    A = np.eye(4)
    A[2, 2] = 0.0
    with pytest.raises(FactorizationError, match="row 2"):
        sparse_factor(csr_matrix(A))


def test_factor_numerical_singularity():
    # structurally full but numerically singular
    A = csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(FactorizationError):
        sparse_factor(A)


def test_factor_residual_over_many_rhs():
    n = 60
    A = csr_matrix(sparse_random(n, n, density=0.2, random_state=11) + 5 * speye(n))
    f = sparse_factor(A)
    rng = np.random.default_rng(3)
    V = rng.standard_normal((n, 100))
    X = f.solve(V)
    col_resid = np.linalg.norm(A @ X - V, axis=0)
    assert np.all(col_resid <= 1e-10 * np.linalg.norm(V, axis=0))


def test_operator_linearity():
    rng = np.random.default_rng(4)
    A = csr_matrix(sparse_random(40, 40, density=0.2, random_state=5))
    op = wrap_sparse(A)
    V = rng.standard_normal((40, 2))
    W = rng.standard_normal((40, 2))
    a, b = rng.standard_normal(2)
    lhs = op.apply(a * V + b * W)
    rhs = a * op.apply(V) + b * op.apply(W)
    assert frob_norm(lhs - rhs) <= 1e-12 * max(frob_norm(lhs), 1.0)


def test_operator_forward_inverse_roundtrip():
    rng = np.random.default_rng(5)
    A = csr_matrix(sparse_random(50, 50, density=0.2, random_state=6) + 4 * speye(50))
    op = wrap_sparse(A)
    V = rng.standard_normal((50, 3))
    assert frob_norm(op.apply(op.apply_inverse(V)) - V) <= 1e-10 * frob_norm(V)


def test_operator_transpose_action():
    rng = np.random.default_rng(6)
    A = csr_matrix(sparse_random(30, 30, density=0.3, random_state=8))
    op = wrap_sparse(A)
    V = rng.standard_normal((30, 2))
    np.testing.assert_allclose(op.apply_transpose(V), A.T @ V, rtol=1e-13)


def test_operator_without_inverse_raises():
    op = wrap_sparse(csr_matrix(np.eye(3)), with_inverse=False)
    with pytest.raises(CapabilityError):
        op.apply_inverse(np.ones((3, 1)))


def test_pair_operator_zero_stiffness_is_identity():
    M, _ = heat_fem_matrices(20, 0.05)
    f = Factorization(M)
    op = operator_from_pair(f, M)
    rng = np.random.default_rng(7)
    V = rng.standard_normal((20, 2))
    np.testing.assert_allclose(op.apply(V), V, atol=1e-12)


def test_pair_operator_roundtrip_and_dense_agreement():
    n, dt, alpha = 10, 0.01, 0.05
    M, K = heat_fem_matrices(n, alpha)
    shifted = csr_matrix(M - dt * K)
    op = operator_from_pair(Factorization(shifted), M)
    rng = np.random.default_rng(8)
    V = rng.standard_normal((n, 3))
    assert frob_norm(op.apply(op.apply_inverse(V)) - V) <= 1e-10 * frob_norm(V)
    A_dense = np.linalg.solve(shifted.toarray(), M.toarray())
    np.testing.assert_allclose(op.apply(V), A_dense @ V, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(op.apply_transpose(V), A_dense.T @ V,
                               rtol=1e-11, atol=1e-13)


def test_wrap_dense_matches_sparse():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((12, 12)) + 6 * np.eye(12)
    od = wrap_dense(A)
    os_ = wrap_sparse(csr_matrix(A))
    V = rng.standard_normal((12, 2))
    np.testing.assert_allclose(od.apply(V), os_.apply(V), rtol=1e-13)
    np.testing.assert_allclose(od.apply_inverse(V), os_.apply_inverse(V),
                               rtol=1e-10)
