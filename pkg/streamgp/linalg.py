"""
Linear Algebra Module for streamgp

This module provides the factorizations every model relies on: Cholesky with
jitter escalation, triangular solves and log-determinants. No explicit inverse
is ever formed.
High cohesion: Contains only dense linear-algebra helpers.
Low coupling: Depends only on constants, errors and logger.
"""

from typing import Optional

import numpy as np
from scipy import linalg as sla

from .constants import DEFAULT_JITTER, JITTER_GROWTH, JITTER_RETRIES
from .errors import NumericalError
from .logger import get_logger

logger = get_logger("linalg")


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (A + A^T) / 2."""
    return 0.5 * (matrix + matrix.T)


def default_jitter(matrix: np.ndarray) -> float:
    """
    Jitter for a square kernel matrix: DEFAULT_JITTER times its mean diagonal.

    For stationary kernel matrices the mean diagonal is the output scale.

    Args:
        matrix: Square matrix

    Returns:
        Absolute jitter amount
    """
    if matrix.size == 0:
        return DEFAULT_JITTER
    scale = float(np.mean(np.abs(np.diag(matrix))))
    return DEFAULT_JITTER * (scale if scale > 0.0 else 1.0)


def jittered_cholesky(matrix: np.ndarray, jitter: Optional[float] = None,
                      retries: int = JITTER_RETRIES) -> np.ndarray:
    """
    Lower Cholesky factor of matrix + jitter * I with escalation.

    On failure the jitter grows by JITTER_GROWTH up to `retries` times.

    Args:
        matrix: Symmetric matrix expected to be positive semi-definite
        jitter: Initial absolute jitter (default: default_jitter(matrix))
        retries: Number of escalations after the first attempt

    Returns:
        Lower-triangular factor L with L L^T = matrix + jitter * I

    Raises:
        NumericalError: If every attempt fails or the input is not finite
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NumericalError(f"Cholesky needs a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] == 0:
        return np.zeros((0, 0))
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Cholesky input contains non-finite entries")

    base = default_jitter(matrix)
    amount = base if jitter is None else float(jitter)
    identity = np.eye(matrix.shape[0])
    for attempt in range(retries + 1):
        try:
            return np.linalg.cholesky(matrix + amount * identity)
        except np.linalg.LinAlgError:
            logger.debug(f"Cholesky failed with jitter {amount:.3e} (attempt {attempt + 1})")
            amount = max(amount, base) * JITTER_GROWTH
    logger.error(f"Cholesky failed after {retries} jitter escalations")
    raise NumericalError(f"matrix not positive definite after {retries} jitter escalations")


def solve_lower(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L x = rhs for lower-triangular L."""
    return sla.solve_triangular(chol, rhs, lower=True)


def solve_upper(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L^T x = rhs for lower-triangular L."""
    return sla.solve_triangular(chol, rhs, lower=True, trans="T")


def chol_solve(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = rhs."""
    return solve_upper(chol, solve_lower(chol, rhs))


def chol_logdet(chol: np.ndarray) -> float:
    """log det(L L^T)."""
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of a matrix."""
    return float(np.linalg.eigvalsh(symmetrize(np.asarray(matrix, dtype=float)))[0])
