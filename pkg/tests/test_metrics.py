"""Tests for evaluation metrics."""

import io
import unittest

import numpy as np

from streamgp.constants import ECE_LEVELS
from streamgp.errors import InputError
from streamgp.gp import Predictive
from streamgp.metrics import MetricsReport, MetricsRow, ece, nlpd, rmse, summarize


class TestPointMetrics(unittest.TestCase):
    """Test RMSE and NLPD."""

    def test_rmse(self):
        """Test RMSE on a small example."""
        self.assertAlmostEqual(rmse([1.0, 2.0], [1.0, 4.0]), np.sqrt(2.0))

    def test_rmse_length_mismatch(self):
        """Test that mismatched lengths raise InputError."""
        with self.assertRaises(InputError):
            rmse([1.0, 2.0], [1.0])

    def test_nlpd_at_mean(self):
        """Test NLPD of targets at the mean with unit variance."""
        pred = Predictive(np.zeros(3), np.ones(3), True)
        self.assertAlmostEqual(nlpd(pred, np.zeros(3)), 0.5 * np.log(2.0 * np.pi))

    def test_nlpd_penalises_overconfidence(self):
        """Test that a narrower wrong predictive scores worse."""
        y = np.ones(4)
        wide = nlpd(Predictive(np.zeros(4), np.ones(4), True), y)
        narrow = nlpd(Predictive(np.zeros(4), 0.01 * np.ones(4), True), y)
        self.assertGreater(narrow, wide)

    def test_nlpd_needs_positive_variance(self):
        """Test that zero variance raises InputError."""
        with self.assertRaises(InputError):
            nlpd(Predictive(np.zeros(2), np.zeros(2)), np.zeros(2))


class TestCalibration(unittest.TestCase):
    """Test the expected calibration error."""

    def test_calibrated_samples(self):
        """Test that samples from the data distribution are nearly calibrated."""
        rng = np.random.default_rng(0)
        samples = rng.standard_normal((400, 2000))
        y = rng.standard_normal(2000)
        self.assertLess(ece(samples, y), 0.05)

    def test_overconfident_samples(self):
        """Test that intervals missing every target give the mean level."""
        samples = 1e-3 * np.random.default_rng(1).standard_normal((50, 10))
        y = 5.0 * np.ones(10)
        self.assertAlmostEqual(ece(samples, y), float(np.mean(ECE_LEVELS)))

    def test_needs_two_samples(self):
        """Test that a single sample is rejected."""
        with self.assertRaises(InputError):
            ece(np.zeros((1, 3)), np.zeros(3))


class TestReport(unittest.TestCase):
    """Test summaries and the CSV report."""

    def test_summarize(self):
        """Test the mean and two standard errors."""
        self.assertEqual(summarize([2.0]), (2.0, 0.0))
        mean, err = summarize([1.0, 3.0])
        self.assertAlmostEqual(mean, 2.0)
        self.assertAlmostEqual(err, 2.0 * np.sqrt(2.0) / np.sqrt(2.0))

    def test_row_validation(self):
        """Test that a negative RMSE is rejected."""
        with self.assertRaises(InputError):
            MetricsRow(1, 1, -0.1, 0.0, 0)

    def test_write_csv(self):
        """Test the CSV layout."""
        report = MetricsReport()
        report.add(MetricsRow(1, 1, 0.5, 1.25, 7))
        report.add(MetricsRow(2, 1, 0.25, -0.5, 3))
        stream = io.StringIO()
        report.write_csv(stream)
        self.assertEqual(stream.getvalue().splitlines(),
                         ["task_learned,task_eval,rmse,nlpd,wall_ms", "1,1,0.5,1.25,7", "2,1,0.25,-0.5,3"])
        np.testing.assert_allclose(report.column("rmse", task_learned=2), [0.25])


if __name__ == '__main__':
    unittest.main()
