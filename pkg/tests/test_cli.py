"""Tests for the command-line interface."""

import os
import tempfile
import unittest

from streamgp.cli import main
from streamgp.constants import EXIT_OK, EXIT_USAGE
from streamgp.data import load_csv


class TestCli(unittest.TestCase):
    """Test commands and exit codes."""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def _path(self, name):
        return os.path.join(self.tmpdir.name, name)

    def test_synth(self):
        """Test that synth writes a readable dataset."""
        out = self._path("sine.csv")
        self.assertEqual(main(["synth", "sine-drift", "50", "3", out, "--quiet"]), EXIT_OK)
        self.assertEqual(load_csv(out).size, 50)

    def test_run(self):
        """Test a small run writing its report."""
        config = self._path("run.cfg")
        with open(config, "w", encoding="utf-8") as handle:
            handle.write("dataset = synth:piecewise\nsynth_n = 60\nn_tasks = 2\nmethod = osgpr-resamplez\n"
                         "num_inducing = 5\nlengthscale = 0.2\nfit_hyperparameters = false\nece_samples = 0\n")
        out = self._path("report.csv")
        self.assertEqual(main(["run", config, "--out", out, "--seed", "1", "--quiet"]), EXIT_OK)
        with open(out, "r", encoding="utf-8") as handle:
            self.assertEqual(len(handle.read().splitlines()), 4)

    def test_missing_config(self):
        """Test that a missing config file exits with the usage code."""
        self.assertEqual(main(["run", self._path("absent.cfg"), "--quiet"]), EXIT_USAGE)

    def test_bad_config(self):
        """Test that an unknown key exits with the usage code."""
        config = self._path("bad.cfg")
        with open(config, "w", encoding="utf-8") as handle:
            handle.write("learning_rate = 0.1\n")
        self.assertEqual(main(["run", config, "--quiet"]), EXIT_USAGE)

    def test_bad_arguments(self):
        """Test that argparse errors use the usage code."""
        with self.assertRaises(SystemExit) as ctx:
            main(["synth", "spiral", "10", "0", self._path("x.csv")])
        self.assertEqual(ctx.exception.code, EXIT_USAGE)
        with self.assertRaises(SystemExit) as ctx:
            main([])
        self.assertEqual(ctx.exception.code, EXIT_USAGE)


if __name__ == '__main__':
    unittest.main()
