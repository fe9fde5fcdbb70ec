"""Tests for kernels and spectral sampling."""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from streamgp.errors import InputError, UnsupportedKernelError
from streamgp.kernels import (Kernel, KernelVariant, NoiseModel, kernel_diag, kernel_eval, kernel_gradients,
                              kernel_matrix, rff_kernel_estimate, sample_frequencies)


class TestKernelValues(unittest.TestCase):
    """Test kernel evaluation."""

    def test_rbf_at_zero_distance(self):
        """Test that k(x, x) equals the output scale."""
        kernel = Kernel.rbf(0.7, output_scale_sq=2.5)
        self.assertAlmostEqual(kernel_eval(kernel, 0.3, 0.3), 2.5)

    def test_rbf_value(self):
        """Test RBF against its closed form."""
        kernel = Kernel.rbf(0.5)
        self.assertAlmostEqual(kernel_eval(kernel, 0.0, 1.0), np.exp(-0.5 * 4.0), places=14)

    def test_matern52_value(self):
        """Test Matern-5/2 against its closed form."""
        kernel = Kernel.matern52(2.0, output_scale_sq=1.5)
        r = 0.5
        expected = 1.5 * (1.0 + np.sqrt(5.0) * r + 5.0 * r * r / 3.0) * np.exp(-np.sqrt(5.0) * r)
        self.assertAlmostEqual(kernel_eval(kernel, 1.0, 2.0), expected, places=14)

    def test_ard_lengthscales(self):
        """Test that each dimension uses its own lengthscale."""
        kernel = Kernel.rbf([1.0, 0.1])
        near = kernel_eval(kernel, [0.0, 0.0], [0.5, 0.0])
        far = kernel_eval(kernel, [0.0, 0.0], [0.0, 0.5])
        self.assertGreater(near, far)

    def test_matrix_is_symmetric_psd(self):
        """Test that K(X, X) is symmetric with non-negative spectrum."""
        X = np.random.default_rng(0).uniform(size=(20, 2))
        for kernel in (Kernel.rbf([0.3, 0.6]), Kernel.matern52([0.3, 0.6])):
            K = kernel_matrix(kernel, X)
            assert_allclose(K, K.T)
            self.assertGreater(np.min(np.linalg.eigvalsh(K)), -1e-10)

    def test_diag_matches_matrix(self):
        """Test kernel_diag against the full matrix."""
        X = np.linspace(0, 1, 7)
        kernel = Kernel.matern52(0.4, 3.0)
        assert_allclose(kernel_diag(kernel, X), np.diag(kernel_matrix(kernel, X)))
        linear = Kernel.linear()
        assert_allclose(kernel_diag(linear, X), np.diag(kernel_matrix(linear, X)))

    def test_dimension_mismatch(self):
        """Test that mismatched points are rejected."""
        kernel = Kernel.rbf(1.0)
        with self.assertRaises(InputError):
            kernel_eval(kernel, [0.0, 1.0], 0.0)

    def test_invalid_hyperparameters(self):
        """Test that non-positive hyperparameters are rejected."""
        with self.assertRaises(InputError):
            Kernel.rbf(0.0)
        with self.assertRaises(InputError):
            Kernel.rbf(1.0, output_scale_sq=-1.0)
        with self.assertRaises(ValueError):
            NoiseModel(-0.1)

    def test_noise_floor(self):
        """Test that a zero noise variance is floored."""
        self.assertGreater(NoiseModel(0.0).noise_variance, 0.0)

    def test_variant_parse(self):
        """Test variant names and aliases."""
        self.assertIs(KernelVariant.parse("RBF"), KernelVariant.RBF)
        self.assertIs(KernelVariant.parse("matern-5/2"), KernelVariant.MATERN52)
        with self.assertRaises(InputError):
            KernelVariant.parse("periodic")


class TestKernelGradients(unittest.TestCase):
    """Test analytic kernel gradients."""

    def _check(self, kernel):
        X = np.random.default_rng(1).uniform(size=(6, 2))
        grads = kernel_gradients(kernel, X)
        h = 1e-6
        for j in range(kernel.input_dim):
            up = list(kernel.lengthscales)
            down = list(kernel.lengthscales)
            up[j] *= np.exp(h)
            down[j] *= np.exp(-h)
            numeric = (kernel_matrix(Kernel(kernel.variant, kernel.output_scale_sq, tuple(up)), X)
                       - kernel_matrix(Kernel(kernel.variant, kernel.output_scale_sq, tuple(down)), X)) / (2 * h)
            assert_allclose(grads[j], numeric, rtol=1e-5, atol=1e-8)
        assert_allclose(grads[-1], kernel_matrix(kernel, X))

    def test_rbf_gradients(self):
        """Test RBF lengthscale gradients against central differences."""
        self._check(Kernel.rbf([0.4, 0.9], 1.3))

    def test_matern_gradients(self):
        """Test Matern-5/2 lengthscale gradients against central differences."""
        self._check(Kernel.matern52([0.4, 0.9], 1.3))

    def test_linear_has_no_gradients(self):
        """Test that the Linear kernel is rejected."""
        with self.assertRaises(UnsupportedKernelError):
            kernel_gradients(Kernel.linear(), np.zeros((2, 1)))


class TestFrequencySampling(unittest.TestCase):
    """Test spectral sampling for random Fourier features."""

    def test_seed_reproducibility(self):
        """Test that the same seed gives the same frequencies."""
        kernel = Kernel.rbf(0.5)
        a = sample_frequencies(kernel, 50, 3)
        b = sample_frequencies(kernel, 50, 3)
        np.testing.assert_array_equal(a.frequencies, b.frequencies)
        self.assertEqual(a.kernel_fingerprint, kernel.fingerprint())

    def test_rbf_spectral_variance(self):
        """Test that RBF frequencies have variance 1 / l^2."""
        draws = sample_frequencies(Kernel.rbf(0.5), 20000, 0)
        self.assertAlmostEqual(float(np.var(draws.frequencies)), 4.0, delta=0.2)

    def test_rff_estimate_converges(self):
        """Test the random Fourier feature estimate against the exact kernel."""
        X = np.linspace(0, 1, 5)
        for kernel in (Kernel.rbf(0.5, 2.0), Kernel.matern52(0.5, 2.0)):
            draws = sample_frequencies(kernel, 20000, 7)
            assert_allclose(rff_kernel_estimate(kernel, draws, X), kernel_matrix(kernel, X), atol=0.1)

    def test_linear_kernel_rejected(self):
        """Test that the Linear kernel has no spectral density."""
        with self.assertRaises(UnsupportedKernelError):
            sample_frequencies(Kernel.linear(), 10, 0)

    def test_sample_count(self):
        """Test that at least one sample is required."""
        with self.assertRaises(InputError):
            sample_frequencies(Kernel.rbf(1.0), 0, 0)


if __name__ == '__main__':
    unittest.main()
