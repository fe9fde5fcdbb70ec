"""Tests for the linear-algebra helpers."""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from streamgp.errors import NumericalError
from streamgp.linalg import (chol_logdet, chol_solve, default_jitter, jittered_cholesky, min_eigenvalue,
                             solve_lower, solve_upper, symmetrize)


class TestJitteredCholesky(unittest.TestCase):
    """Test Cholesky with jitter escalation."""

    def test_positive_definite(self):
        """Test that a well-conditioned matrix factorises without jitter."""
        A = np.array([[4.0, 1.0], [1.0, 3.0]])
        L = jittered_cholesky(A, 0.0)
        assert_allclose(L @ L.T, A)
        self.assertTrue(np.allclose(L, np.tril(L)))

    def test_singular_matrix_escalates(self):
        """Test that a rank-deficient matrix factorises after escalation."""
        v = np.array([1.0, 2.0, 3.0])
        L = jittered_cholesky(np.outer(v, v), 0.0)
        self.assertTrue(np.all(np.isfinite(L)))

    def test_indefinite_matrix_fails(self):
        """Test that a clearly indefinite matrix raises NumericalError."""
        with self.assertRaises(NumericalError):
            jittered_cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_non_finite_input(self):
        """Test that NaN input raises NumericalError."""
        with self.assertRaises(NumericalError):
            jittered_cholesky(np.array([[np.nan]]))

    def test_empty_matrix(self):
        """Test the zero-size case."""
        self.assertEqual(jittered_cholesky(np.zeros((0, 0))).shape, (0, 0))

    def test_default_jitter_scales_with_diagonal(self):
        """Test that the default jitter is relative to the mean diagonal."""
        self.assertAlmostEqual(default_jitter(5.0 * np.eye(3)) / default_jitter(np.eye(3)), 5.0)


class TestSolves(unittest.TestCase):
    """Test triangular solves and log-determinants."""

    def setUp(self):
        rng = np.random.default_rng(0)
        B = rng.standard_normal((5, 5))
        self.A = B @ B.T + 5.0 * np.eye(5)
        self.L = np.linalg.cholesky(self.A)
        self.b = rng.standard_normal(5)

    def test_chol_solve(self):
        """Test (L L^T) x = b."""
        assert_allclose(self.A @ chol_solve(self.L, self.b), self.b, atol=1e-12)

    def test_triangular_solves(self):
        """Test L x = b and L^T x = b."""
        assert_allclose(self.L @ solve_lower(self.L, self.b), self.b, atol=1e-12)
        assert_allclose(self.L.T @ solve_upper(self.L, self.b), self.b, atol=1e-12)

    def test_logdet(self):
        """Test log-determinant from the factor."""
        self.assertAlmostEqual(chol_logdet(self.L), np.linalg.slogdet(self.A)[1], places=10)

    def test_symmetrize_and_min_eigenvalue(self):
        """Test symmetrization and the smallest eigenvalue."""
        M = np.array([[2.0, 1.0], [0.0, 2.0]])
        assert_allclose(symmetrize(M), [[2.0, 0.5], [0.5, 2.0]])
        self.assertAlmostEqual(min_eigenvalue(M), 1.5)


if __name__ == '__main__':
    unittest.main()
