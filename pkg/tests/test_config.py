"""Tests for experiment configuration files."""

import unittest

from streamgp.config import ExperimentConfig, parse_config, with_overrides
from streamgp.errors import ConfigError, InputError


class TestParseConfig(unittest.TestCase):
    """Test config parsing."""

    def test_values_and_comments(self):
        """Test typed values, comments and defaults."""
        config = parse_config(
            "# streaming run\n"
            "dataset = synth:sine-drift\n"
            "method = osgpr-fixedz   # baseline\n"
            "num_inducing = 20\n"
            "lengthscale = 0.25\n"
            "fit_hyperparameters = no\n"
            "dt = none\n"
        )
        self.assertEqual(config.dataset, "synth:sine-drift")
        self.assertEqual(config.method, "osgpr-fixedz")
        self.assertEqual(config.num_inducing, 20)
        self.assertEqual(config.lengthscale, 0.25)
        self.assertFalse(config.fit_hyperparameters)
        self.assertIsNone(config.dt)
        self.assertEqual(config.basis, "legs")

    def test_unknown_key(self):
        """Test that an unknown key names its line."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("method = ohsgpr\nlearning_rate = 0.1\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_bad_value(self):
        """Test that a value of the wrong type is rejected."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("num_inducing = many\n")
        self.assertEqual(ctx.exception.line, 1)

    def test_malformed_and_duplicate(self):
        """Test lines without '=' and repeated keys."""
        with self.assertRaises(ConfigError):
            parse_config("method ohsgpr\n")
        with self.assertRaises(ConfigError):
            parse_config("seed = 1\nseed = 2\n")

    def test_empty(self):
        """Test that a file with only comments is rejected."""
        with self.assertRaises(ConfigError):
            parse_config("# nothing\n\n")

    def test_validation(self):
        """Test range and enum checks."""
        for text in ("method = ovff\n", "basis = chebyshev\n", "num_inducing = 0\n", "noise = -1\n",
                     "ece_samples = 1\n", "kernel = linear\n", "ordering = hilbert\n",
                     "scheme = rk4\n", "kfu_source = exact\n"):
            with self.assertRaises(ConfigError, msg=text):
                parse_config(text)

    def test_run_options(self):
        """Test the discretization, K_fu source and wall-time keys."""
        defaults = ExperimentConfig()
        self.assertFalse(defaults.wall_time)
        self.assertEqual(defaults.kfu_source, "features")
        config = parse_config("scheme = bilinear-left\nkfu_source = recurrence\nwall_time = yes\n")
        self.assertEqual((config.scheme, config.kfu_source), ("bilinear-left", "recurrence"))
        self.assertTrue(config.wall_time)

    def test_config_error_is_input_error(self):
        """Test the error hierarchy used for exit codes."""
        self.assertTrue(issubclass(ConfigError, InputError))


class TestOverrides(unittest.TestCase):
    """Test command-line overrides."""

    def test_overrides(self):
        """Test seed and output overrides."""
        config = with_overrides(ExperimentConfig(), seed=7, output="out.csv")
        self.assertEqual((config.seed, config.output), (7, "out.csv"))
        base = ExperimentConfig()
        self.assertIs(with_overrides(base), base)


if __name__ == '__main__':
    unittest.main()
