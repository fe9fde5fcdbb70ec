"""
Errors Module for streamgp

Exception hierarchy raised by the library and mapped to exit codes by the CLI.
Input problems derive from ValueError so callers that catch ValueError keep
working.
"""

from typing import Any, Optional


class StreamGPError(Exception):
    """Base class for every streamgp error."""


class InputError(StreamGPError, ValueError):
    """Invalid shapes, non-finite values or unknown enum values."""


class UnsupportedKernelError(InputError):
    """Kernel variant not usable on the requested path (e.g. Linear in RFF)."""


class UnsupportedFamilyError(InputError):
    """HiPPO family not supported by the requested operation."""


class StateError(StreamGPError, RuntimeError):
    """Operation incompatible with the current model state."""


class NumericalError(StreamGPError, ArithmeticError):
    """
    Factorization or objective failure that jitter could not repair.

    Attributes:
        last_good_state: The most recent valid state, when one exists.
    """

    def __init__(self, message: str, last_good_state: Optional[Any] = None):
        super().__init__(message)
        self.last_good_state = last_good_state


class DataError(InputError):
    """Malformed dataset file."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(InputError):
    """Malformed or unknown configuration entry."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
