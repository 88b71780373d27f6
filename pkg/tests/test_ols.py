import warnings

import numpy as np
import pytest

from adact.ols import (
    ConditioningWarning,
    FirstBasisDegenerateError,
    orthonormal_error,
    orthonormal_weights,
    orthonormalize,
    solve_via_ols,
    target_energy,
)


def gauss_solve(A, B):
    """Gaussian elimination with partial pivoting, written out longhand."""
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float).reshape(len(A), -1)
    n = len(A)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        A[[col, piv]], B[[col, piv]] = A[[piv, col]], B[[piv, col]]
        for row in range(col + 1, n):
            f = A[row, col] / A[col, col]
            A[row, col:] -= f * A[col, col:]
            B[row] -= f * B[col]
    X = np.zeros_like(B)
    for row in reversed(range(n)):
        X[row] = (B[row] - A[row, row + 1:] @ X[row + 1:]) / A[row, row]
    return X


def well_conditioned(rng, n, m):
    Z = rng.standard_normal((3 * n + 5, n))
    R = Z.T @ Z / len(Z) + 0.1 * np.eye(n)
    return R, rng.standard_normal((n, m))


class TestOrthonormalize:
    def test_identity(self):
        fac = orthonormalize(np.eye(4))
        np.testing.assert_allclose(fac.A, np.eye(4))
        assert fac.valid_count == 4

    def test_diagonal(self):
        fac = orthonormalize(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(fac.A, np.diag([0.5, 1 / 3]))

    def test_cholesky_inverse_oracle(self, rng):
        R, _ = well_conditioned(rng, 6, 1)
        L = np.linalg.cholesky(R)
        np.testing.assert_allclose(orthonormalize(R).A, np.linalg.inv(L), rtol=1e-9, atol=1e-10)

    def test_lower_triangular_and_orthonormal(self, rng):
        R, _ = well_conditioned(rng, 8, 1)
        A = orthonormalize(R).A
        assert np.all(np.triu(A, 1) == 0)
        np.testing.assert_allclose(A @ R @ A.T, np.eye(8), atol=1e-8)

    def test_duplicated_column_flagged(self, rng):
        Z = rng.standard_normal((30, 3))
        Z = np.column_stack([Z, Z[:, 1]])
        fac = orthonormalize(Z.T @ Z / 30)
        assert fac.accepted.tolist() == [True, True, True, False]
        assert not fac.A[3].any()

    def test_first_basis_degenerate(self):
        with pytest.raises(FirstBasisDegenerateError):
            orthonormalize(np.diag([0.0, 1.0]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            orthonormalize(np.ones((2, 3)))


class TestSolve:
    def test_identity(self, rng):
        C = rng.standard_normal((5, 2))
        np.testing.assert_allclose(solve_via_ols(np.eye(5), C), C.T)

    def test_gauss_oracle(self, rng):
        R, C = well_conditioned(rng, 5, 3)
        np.testing.assert_allclose(solve_via_ols(R, C), gauss_solve(R, C).T, rtol=1e-8, atol=1e-10)

    def test_vector_rhs(self, rng):
        R, C = well_conditioned(rng, 4, 1)
        w = solve_via_ols(R, C[:, 0])
        assert w.shape == (4,)
        np.testing.assert_allclose(R @ w, C[:, 0], atol=1e-10)

    def test_rank_deficient_pinv_oracle(self, rng):
        X = rng.standard_normal((40, 4))
        X = np.column_stack([X, X[:, 0] - 2 * X[:, 2]])
        T = rng.standard_normal((40, 2))
        W = solve_via_ols(X.T @ X / 40, X.T @ T / 40)
        assert np.all(np.isfinite(W))
        np.testing.assert_allclose(X @ W.T, X @ (np.linalg.pinv(X) @ T), atol=1e-6)
        # the dependent basis function gets zero weight
        assert not W[:, 4].any()

    def test_zero_system(self):
        assert not solve_via_ols(np.zeros((3, 3)), np.ones((3, 1))).any()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            solve_via_ols(np.eye(3), np.ones((2, 1)))


class TestOrthonormalError:
    def test_zero_weights(self):
        assert orthonormal_error(np.zeros((1, 3)), 2.5) == 2.5

    def test_perfect_fit(self, rng):
        X = rng.standard_normal((20, 3))
        T = X @ rng.standard_normal((3, 1))
        fac = orthonormalize(X.T @ X / 20)
        Wp = orthonormal_weights(fac, X.T @ T / 20)
        assert orthonormal_error(Wp, target_energy(T)) == pytest.approx(0.0, abs=1e-12)

    def test_matches_forward_mse(self, rng):
        X = rng.standard_normal((25, 4))
        T = rng.standard_normal((25, 2))
        R, C = X.T @ X / 25, X.T @ T / 25
        W, fac = solve_via_ols(R, C, return_factorization=True)
        E = orthonormal_error(orthonormal_weights(fac, C), target_energy(T))
        assert E == pytest.approx(np.sum((T - X @ W.T) ** 2) / 25, abs=1e-8)

    def test_negative_warns(self):
        with pytest.warns(ConditioningWarning):
            orthonormal_error(np.ones((1, 2)), 1.0)

    def test_no_warning_on_round_off(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            orthonormal_error(np.array([[1.0]]), 1.0 - 1e-14)
