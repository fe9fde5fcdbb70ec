"""Tests for dataset ingestion and synthetic data."""

import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from streamgp.data import SYNTHETIC_KINDS, eval_split, generate_synthetic, load_csv, write_csv
from streamgp.errors import DataError, InputError


class TestCsv(unittest.TestCase):
    """Test CSV reading and writing."""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def _write(self, text):
        path = os.path.join(self.tmpdir.name, "data.csv")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    def test_timeseries(self):
        """Test a time-series file."""
        batch = load_csv(self._write("t,y\n0.1,1.5\n0.2,-0.5\n\n0.2,0.0\n"))
        self.assertEqual(batch.size, 3)
        assert_allclose(batch.timestamps, [0.1, 0.2, 0.2])
        assert_allclose(batch.y, [1.5, -0.5, 0.0])

    def test_multidim(self):
        """Test a multidimensional file."""
        batch = load_csv(self._write("x1,x2,y\n1,2,3\n4,5,6\n"), mode="multidim")
        assert_allclose(batch.X, [[1.0, 2.0], [4.0, 5.0]])
        self.assertIsNone(batch.timestamps)

    def test_decreasing_time(self):
        """Test that decreasing time names the offending line."""
        with self.assertRaises(DataError) as ctx:
            load_csv(self._write("t,y\n0.2,1\n0.1,1\n"))
        self.assertEqual(ctx.exception.line, 3)

    def test_bad_rows(self):
        """Test unparsable values, wrong widths and non-finite values."""
        for text, line in (("t,y\n0.1,abc\n", 2), ("t,y\n0.1,1,2\n", 2), ("t,y\n0.1,1\n0.2,nan\n", 3)):
            with self.assertRaises(DataError) as ctx:
                load_csv(self._write(text))
            self.assertEqual(ctx.exception.line, line)

    def test_bad_header(self):
        """Test that a wrong header is rejected."""
        with self.assertRaises(DataError):
            load_csv(self._write("time,y\n0.1,1\n"))
        with self.assertRaises(DataError):
            load_csv(self._write("x1,x3,y\n1,2,3\n"), mode="multidim")

    def test_missing_file(self):
        """Test that a missing file raises DataError."""
        with self.assertRaises(DataError):
            load_csv(os.path.join(self.tmpdir.name, "absent.csv"))

    def test_written_values_read_back(self):
        """Test that written floats are read back exactly."""
        batch = generate_synthetic("two-cluster-2d", 7, 0.1, 3)
        path = os.path.join(self.tmpdir.name, "out.csv")
        write_csv(batch, path, mode="multidim")
        again = load_csv(path, mode="multidim")
        assert_array_equal(again.X, batch.X)
        assert_array_equal(again.y, batch.y)


class TestSynthetic(unittest.TestCase):
    """Test the synthetic generators."""

    def test_deterministic(self):
        """Test that a seed fixes the data."""
        for kind in SYNTHETIC_KINDS:
            a, b = generate_synthetic(kind, 20, 0.1, 5), generate_synthetic(kind, 20, 0.1, 5)
            assert_array_equal(a.X, b.X)
            assert_array_equal(a.y, b.y)

    def test_time_grid(self):
        """Test that time series sample t_i = i / n."""
        batch = generate_synthetic("sine-drift", 4, 0.0, 0)
        assert_allclose(batch.timestamps, [0.25, 0.5, 0.75, 1.0])

    def test_clusters(self):
        """Test that the two clusters sit around (-2, -2) and (2, 2)."""
        batch = generate_synthetic("two-cluster-2d", 200, 0.0, 0)
        assert_allclose(batch.X[:100].mean(axis=0), [-2.0, -2.0], atol=0.2)
        assert_allclose(batch.X[100:].mean(axis=0), [2.0, 2.0], atol=0.2)
        assert_allclose(batch.y, np.sin(batch.X[:, 0]) + np.cos(batch.X[:, 1]))

    def test_unknown_kind(self):
        """Test that unknown kinds are rejected."""
        with self.assertRaises(InputError):
            generate_synthetic("spiral", 10, 0.1, 0)


class TestEvalSplit(unittest.TestCase):
    """Test the held-out split."""

    def test_every_fifth_point(self):
        """Test that the 5th, 10th, ... points are held out."""
        batch = generate_synthetic("sine-drift", 12, 0.0, 0)
        train, test = eval_split(batch)
        self.assertEqual((train.size, test.size), (10, 2))
        assert_allclose(test.timestamps, [5 / 12, 10 / 12])


if __name__ == '__main__':
    unittest.main()
