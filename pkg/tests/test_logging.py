"""Tests for logging functionality."""

import unittest
import logging
from io import StringIO

from streamgp import setup_logger
from streamgp.data import generate_synthetic
from streamgp.kernels import Kernel, NoiseModel
from streamgp.logger import get_logger, timed
from streamgp.online import Method, OnlineSettings, init_state, online_update


class TestLogging(unittest.TestCase):
    """Test logging functionality."""

    def test_module_loggers_nest(self):
        """Test that module loggers live under the package logger."""
        self.assertEqual(get_logger("online").name, "streamgp.online")
        self.assertEqual(get_logger("streamgp.hippo").name, "streamgp.hippo")
        self.assertEqual(get_logger().name, "streamgp")

    def test_setup_logger(self):
        """Test logger setup function."""
        logger = setup_logger("test_logger", level=logging.DEBUG)

        self.assertEqual(logger.name, "test_logger")
        self.assertEqual(logger.level, logging.DEBUG)
        self.assertTrue(len(logger.handlers) > 0)

    def test_setup_is_idempotent(self):
        """Test that repeated setup does not stack handlers."""
        first = len(setup_logger("test_idempotent").handlers)
        second = len(setup_logger("test_idempotent", level=logging.INFO).handlers)
        self.assertEqual(first, second)

    def test_timed(self):
        """Test that timed fills in a non-negative millisecond count."""
        with timed(get_logger("test"), "block") as wall:
            pass
        self.assertEqual(len(wall), 1)
        self.assertGreaterEqual(wall[0], 0)

    def test_logging_output(self):
        """Test that learning a task logs a summary line."""
        log_stream = StringIO()
        handler = logging.StreamHandler(log_stream)
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))

        logger = logging.getLogger("streamgp")
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)

        settings = OnlineSettings(method=Method.OSGPR_FIXEDZ, num_inducing=5, fit_first_task=False)
        state = init_state(settings, Kernel.rbf(0.2), NoiseModel(0.01))
        online_update(state, generate_synthetic("sine-drift", 20, 0.1, 0))

        log_output = log_stream.getvalue()
        self.assertIn("Task 1: 20 points", log_output)

        logger.removeHandler(handler)
        logger.setLevel(logging.WARNING)


if __name__ == '__main__':
    unittest.main()
