"""Tests for the interdomain covariance recurrences."""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from streamgp.errors import InputError, StateError, UnsupportedFamilyError
from streamgp.hippo import BasisFamily, HippoOperator, Scheme, operator_matrices, project_signal
from streamgp.interdomain import (advance_features, advance_kfu, assemble_kuu, backfill_kfu, checkpoint_features,
                                  cross_kuu, direct_kuu, empty_kfu, feature_kfu, initial_features, initial_kuu_direct,
                                  quadrature_cross_kuu, quadrature_kfu, quadrature_kuu, step_features, step_kfu,
                                  step_kuu_direct)
from streamgp.kernels import Kernel, kernel_diag, sample_frequencies


def relative_error(estimate, reference):
    return float(np.linalg.norm(estimate - reference) / np.linalg.norm(reference))


class TestKfuRows(unittest.TestCase):
    """Test K_fu row recurrences."""

    def setUp(self):
        self.op = HippoOperator(BasisFamily.LEGS, 6)
        self.kernel = Kernel.rbf(0.5)

    def test_rows_match_quadrature(self):
        """Test a back-filled row against Gauss-Legendre quadrature."""
        rows = backfill_kfu([[0.5]], self.op, self.kernel, 1.0, 1e-3)
        reference = quadrature_kfu(self.kernel, 0.5, self.op, 1.0)
        self.assertLess(np.max(np.abs(rows.rows[0] - reference)), 1e-2)

    def test_incremental_equals_backfill(self):
        """Test that advancing in two blocks matches a one-shot back-fill."""
        anchors = np.array([[0.1], [0.4], [0.9]])
        rows = empty_kfu(anchors, self.op, self.kernel)
        rows = advance_kfu(rows, self.op, self.kernel, 1e-3, n_steps=300)
        rows = advance_kfu(rows, self.op, self.kernel, 1e-3, n_steps=700)
        oneshot = backfill_kfu(anchors, self.op, self.kernel, 1.0, 1e-3)
        assert_allclose(rows.rows, oneshot.rows, rtol=1e-12, atol=1e-14)
        self.assertEqual(rows.end_time, oneshot.end_time)

    def test_step_with_explicit_source(self):
        """Test that the default source of a time-series step is the new time."""
        rows = backfill_kfu([[0.2]], self.op, self.kernel, 0.1, 0.01)
        implicit = step_kfu(rows, self.op, self.kernel, 0.01)
        explicit = step_kfu(rows, self.op, self.kernel, 0.01, source=[0.11])
        assert_allclose(implicit.rows, explicit.rows, rtol=1e-12)

    def test_bilinear_rows(self):
        """Test bilinear rows against quadrature."""
        rows = backfill_kfu([[0.3]], self.op, self.kernel, 1.0, 1e-3, Scheme.BILINEAR)
        reference = quadrature_kfu(self.kernel, 0.3, self.op, 1.0)
        self.assertLess(np.max(np.abs(rows.rows[0] - reference)), 1e-3)

    def test_source_count_mismatch(self):
        """Test that a source path of the wrong length is rejected."""
        with self.assertRaises(InputError):
            backfill_kfu([[0.2]], self.op, self.kernel, 0.1, 0.01, sources=np.zeros((3, 1)))

    def test_backfill_needs_positive_time(self):
        """Test that back-filling to t = 0 is rejected."""
        with self.assertRaises(InputError):
            backfill_kfu([[0.2]], self.op, self.kernel, 0.0, 0.01)

    def test_multidim_needs_sources(self):
        """Test that multidimensional rows cannot default to time sources."""
        kernel = Kernel.rbf([1.0, 1.0])
        rows = empty_kfu(np.zeros((2, 2)), self.op, kernel)
        with self.assertRaises(InputError):
            advance_kfu(rows, self.op, kernel, 0.1, n_steps=3)


class TestFeatureKuu(unittest.TestCase):
    """Test the random Fourier feature K_uu."""

    def setUp(self):
        self.op = HippoOperator(BasisFamily.LEGS, 4)
        self.kernel = Kernel.rbf(0.5)
        self.draws = sample_frequencies(self.kernel, 5000, 0)

    def test_kuu_matches_quadrature(self):
        """Test the feature K_uu against nested quadrature."""
        fs = advance_features(initial_features(self.op, self.draws), self.op, 2e-3, n_steps=500)
        estimate = assemble_kuu(fs, self.kernel)
        self.assertLess(relative_error(estimate, quadrature_kuu(self.kernel, self.op, 1.0)), 0.15)

    def test_kuu_is_psd(self):
        """Test that the assembled K_uu is symmetric positive semi-definite."""
        fs = advance_features(initial_features(self.op, self.draws), self.op, 1e-2, n_steps=50)
        K = assemble_kuu(fs, self.kernel)
        assert_allclose(K, K.T)
        self.assertGreater(np.min(np.linalg.eigvalsh(K)), -1e-10)

    def test_cross_kuu_matches_quadrature(self):
        """Test the checkpointed cross-time covariance against quadrature."""
        fs = initial_features(self.op, self.draws)
        fs = advance_features(fs, self.op, 2e-3, n_steps=250)
        fs = checkpoint_features(fs)
        fs = advance_features(fs, self.op, 2e-3, n_steps=250)
        reference = quadrature_cross_kuu(self.kernel, self.op, 0.5, 1.0)
        self.assertLess(relative_error(cross_kuu(fs, 0.5, self.kernel), reference), 0.15)

    def test_cross_at_current_time(self):
        """Test that the cross covariance at the current time is K_uu."""
        fs = advance_features(initial_features(self.op, self.draws), self.op, 1e-2, n_steps=20)
        assert_allclose(cross_kuu(fs, fs.end_time, self.kernel), assemble_kuu(fs, self.kernel))

    def test_missing_checkpoint(self):
        """Test that an unknown old time raises StateError."""
        fs = advance_features(initial_features(self.op, self.draws), self.op, 1e-2, n_steps=20)
        with self.assertRaises(StateError):
            cross_kuu(fs, 0.1, self.kernel)

    def test_single_steps_match_advance(self):
        """Test that repeated single steps equal one multi-step advance."""
        fs = initial_features(self.op, self.draws)
        for _ in range(5):
            fs = step_features(fs, self.op, 1e-2)
        batch = advance_features(initial_features(self.op, self.draws), self.op, 1e-2, n_steps=5)
        assert_allclose(assemble_kuu(fs, self.kernel), assemble_kuu(batch, self.kernel), rtol=1e-12)

    def test_checkpoint_is_idempotent(self):
        """Test that checkpointing twice at one time stores one snapshot."""
        fs = advance_features(initial_features(self.op, self.draws), self.op, 1e-2, n_steps=5)
        fs = checkpoint_features(checkpoint_features(fs))
        self.assertEqual(len(fs.checkpoints), 1)

    def test_multidim_features(self):
        """Test that features advance along explicit two-dimensional sources."""
        kernel = Kernel.rbf([0.5, 0.5])
        draws = sample_frequencies(kernel, 100, 1)
        sources = np.random.default_rng(0).uniform(size=(10, 2))
        fs = advance_features(initial_features(self.op, draws), self.op, 0.1, sources=sources)
        self.assertAlmostEqual(fs.end_time, 1.0)
        assert_allclose(fs.last_source, sources[-1])


class TestFeatureKfu(unittest.TestCase):
    """Test Cov(f, u) contracted from the random features."""

    def setUp(self):
        self.op = HippoOperator(BasisFamily.LEGS, 6)
        self.kernel = Kernel.rbf(0.5)
        draws = sample_frequencies(self.kernel, 4000, 2)
        self.fs = advance_features(initial_features(self.op, draws), self.op, 1e-3, n_steps=1000)

    def test_matches_recurrence_rows(self):
        """Test the feature rows against the exact-kernel recurrence."""
        X = np.array([[0.2], [0.5], [0.8]])
        rows = backfill_kfu(X, self.op, self.kernel, 1.0, 1e-3).rows
        estimate = feature_kfu(self.fs, X, self.kernel)
        self.assertEqual(estimate.shape, (3, 6))
        self.assertLess(relative_error(estimate, rows), 0.1)

    def test_nystrom_residual_non_negative(self):
        """Test that k_ff - K_fu K_uu^-1 K_uf stays non-negative."""
        X = np.linspace(0.0, 1.0, 30)[:, None]
        Kfu = feature_kfu(self.fs, X, self.kernel)
        L = np.linalg.cholesky(assemble_kuu(self.fs, self.kernel) + 1e-10 * np.eye(6))
        A = np.linalg.solve(L, Kfu.T)
        self.assertGreaterEqual(float(np.min(kernel_diag(self.kernel, X) - np.sum(A ** 2, axis=0))), -1e-9)


class TestDirectOde(unittest.TestCase):
    """Test the direct K_uu matrix ODE."""

    def test_only_legs(self):
        """Test that other families are rejected."""
        with self.assertRaises(UnsupportedFamilyError):
            initial_kuu_direct(HippoOperator(BasisFamily.LEGT, 3))

    def test_symmetric_steps(self):
        """Test that every step keeps K_uu symmetric."""
        op = HippoOperator(BasisFamily.LEGS, 4)
        kernel = Kernel.rbf(1.0)
        state = initial_kuu_direct(op)
        for _ in range(10):
            state = step_kuu_direct(state, op, kernel, 0.01)
        assert_allclose(state.kuu, state.kuu.T)
        self.assertAlmostEqual(state.end_time, 0.1)

    def test_first_step(self):
        """Test c(dt) = dt B(dt) k(dt, dt) and K(dt) = dt (B c^T + c B^T)."""
        op = HippoOperator(BasisFamily.LEGS, 4)
        kernel = Kernel.rbf(1.0, output_scale_sq=2.0)
        state = step_kuu_direct(initial_kuu_direct(op), op, kernel, 0.01)
        _, B = operator_matrices(op, 0.01)
        c = 0.01 * B * 2.0
        assert_allclose(state.boundary_coeffs, c, rtol=1e-12)
        assert_allclose(state.kuu, 0.01 * (np.outer(B, c) + np.outer(c, B)), rtol=1e-12)

    def test_boundary_row_is_resourced(self):
        """Test that the moving-anchor row follows the recurrence of the constant signal k(t, t)."""
        op = HippoOperator(BasisFamily.LEGS, 5)
        kernel = Kernel.rbf(0.5)
        state = initial_kuu_direct(op)
        for _ in range(50):
            state = step_kuu_direct(state, op, kernel, 0.01)
        constant = project_signal(lambda x: np.ones_like(x), op, 0.5, 0.01)
        assert_allclose(state.boundary_coeffs, constant.coeffs, rtol=1e-10, atol=1e-12)
        fixed_anchor = quadrature_kfu(kernel, 0.5, op, 0.5)
        self.assertGreater(float(np.max(np.abs(state.boundary_coeffs - fixed_anchor))), 1e-2)

    def test_coarse_step_loses_to_features(self):
        """Test that at a coarse step the direct ODE is less accurate than the feature K_uu."""
        op = HippoOperator(BasisFamily.LEGS, 8)
        kernel = Kernel.rbf(0.5)
        reference = quadrature_kuu(kernel, op, 1.0)
        direct = relative_error(direct_kuu(op, kernel, 1.0, 1e-2), reference)
        fs = advance_features(initial_features(op, sample_frequencies(kernel, 2000, 0)), op, 1e-2, n_steps=100)
        features = relative_error(assemble_kuu(fs, kernel), reference)
        self.assertTrue(not np.isfinite(direct) or direct > features)


if __name__ == '__main__':
    unittest.main()
