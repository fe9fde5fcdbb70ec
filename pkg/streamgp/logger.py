"""
Logging Module for streamgp

This module provides logging configuration and a wall-clock timing helper.
High cohesion: Contains only logging configuration and utilities.
Low coupling: No dependencies on other streamgp modules.
"""

import logging
import time
from contextlib import contextmanager
from typing import Iterator, List

ROOT_LOGGER = "streamgp"


def setup_logger(name: str = ROOT_LOGGER, level: int = logging.WARNING) -> logging.Logger:
    """
    Set up and return a logger for streamgp.

    Repeated calls reuse the existing handler and only adjust the level.

    Args:
        name: Logger name (default: "streamgp")
        level: Logging level (default: logging.WARNING)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    for handler in logger.handlers:
        handler.setLevel(level)

    return logger


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """
    Get a streamgp logger. Module names are nested under the package logger,
    so get_logger("online") returns "streamgp.online".

    Args:
        name: Logger name or short module name

    Returns:
        Logger instance
    """
    if name != ROOT_LOGGER and not name.startswith(ROOT_LOGGER + "."):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)


@contextmanager
def timed(logger: logging.Logger, label: str) -> Iterator[List[int]]:
    """
    Measure the wall time of a block in whole milliseconds.

    The yielded list receives a single element, the elapsed milliseconds,
    once the block exits.

    Args:
        logger: Logger receiving the DEBUG timing line
        label: Text identifying the block

    Yields:
        A one-slot list filled with the elapsed milliseconds on exit
    """
    slot: List[int] = []
    start = time.perf_counter()
    try:
        yield slot
    finally:
        elapsed = int(round((time.perf_counter() - start) * 1000.0))
        slot.append(elapsed)
        logger.debug(f"{label} took {elapsed} ms")
