"""Tests for the recurrence self-checks."""

import unittest

from streamgp.config import ExperimentConfig
from streamgp.hippo import BasisFamily, HippoOperator, Scheme
from streamgp.kernels import Kernel
from streamgp.oracle import OracleRow, check_kfu, check_streaming, compare_direct_ode, format_table, oracle_check


class TestOracleRows(unittest.TestCase):
    """Test individual checks."""

    def test_streaming_exactness(self):
        """Test that fixed-Z streaming passes against batch SGPR."""
        row = check_streaming(ExperimentConfig(), Kernel.rbf(1.0), 1e-5)
        self.assertTrue(row.passed)
        self.assertFalse(row.recorded)

    def test_kfu(self):
        """Test the K_fu row check at the default step."""
        row = check_kfu(HippoOperator(BasisFamily.LEGS, 6), Kernel.rbf(0.5), 1e-3, Scheme.EULER, 1e-2)
        self.assertTrue(row.passed)

    def test_direct_ode_is_recorded(self):
        """Test that the direct ODE comparison never fails the run."""
        rows = compare_direct_ode(Kernel.rbf(0.5), 200, 0)
        self.assertEqual(len(rows), 2)
        self.assertTrue(all(r.recorded and r.passed for r in rows))

    def test_failed_row(self):
        """Test that an error above the threshold fails a row."""
        row = check_kfu(HippoOperator(BasisFamily.LEGS, 6), Kernel.rbf(0.5), 1e-3, Scheme.EULER, 0.0)
        self.assertFalse(row.passed)

    def test_coarse_step_fails(self):
        """Test that a step of 0.5 fails the K_fu check."""
        rows = {r.name: r for r in oracle_check(ExperimentConfig(dt=0.5, rff_samples=200))}
        self.assertFalse(rows["kfu-rows"].passed)
        self.assertTrue(rows["streaming-exactness"].passed)

    def test_format_table(self):
        """Test the verdict column."""
        table = format_table([OracleRow("a", 0.1, 1.0, True), OracleRow("bb", 2.0, 1.0, False),
                              OracleRow("c", 5.0, 0.1, True, True)])
        lines = table.splitlines()
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[1].endswith("pass"))
        self.assertTrue(lines[2].endswith("FAIL"))
        self.assertTrue(lines[3].endswith("recorded"))


if __name__ == '__main__':
    unittest.main()
