"""
Metrics Module for streamgp

RMSE, NLPD and sample-based expected calibration error, plus the per-task
report the benchmark writes out.
"""

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .constants import CSV_HEADER, ECE_LEVELS
from .errors import InputError
from .gp import Predictive


def _paired(y, yhat) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.shape != yhat.shape:
        raise InputError(f"length mismatch: {y.shape[0]} targets, {yhat.shape[0]} predictions")
    if y.size == 0:
        raise InputError("metrics need at least one point")
    return y, yhat


def rmse(y, yhat) -> float:
    """Root mean squared error."""
    y, yhat = _paired(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def nlpd(pred: Predictive, y) -> float:
    """
    Negative log predictive density, -mean_i log N(y_i; mu_i, s_i^2).

    Raises:
        InputError: If any predictive variance is not positive
    """
    y, mean = _paired(y, pred.mean)
    var = np.asarray(pred.variance, dtype=float)
    if np.any(var <= 0.0):
        raise InputError("NLPD needs strictly positive predictive variances")
    return float(0.5 * np.log(2.0 * np.pi) + 0.5 * np.mean(np.log(var) + (y - mean) ** 2 / var))


def ece(samples, y, levels: Sequence[float] = ECE_LEVELS) -> float:
    """
    Expected calibration error from predictive samples.

    For each confidence level c the central interval between the empirical
    (1 - c)/2 and (1 + c)/2 quantiles of each point's samples is formed; the
    error is the mean over levels of |coverage - c|.

    Args:
        samples: (S, N) predictive samples, S >= 2
        y: (N,) targets
        levels: Confidence levels

    Returns:
        ECE in [0, 1]
    """
    samples = np.asarray(samples, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise InputError("ECE needs at least two samples per point")
    if samples.shape[1] != y.shape[0]:
        raise InputError("sample columns must match the targets")
    errors = []
    for level in levels:
        lo = np.quantile(samples, 0.5 - level / 2.0, axis=0)
        hi = np.quantile(samples, 0.5 + level / 2.0, axis=0)
        coverage = float(np.mean((y >= lo) & (y <= hi)))
        errors.append(abs(coverage - level))
    return float(np.mean(errors))


def summarize(values) -> Tuple[float, float]:
    """Mean and two standard errors (zero for a single value)."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise InputError("nothing to summarize")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(np.mean(values)), float(2.0 * np.std(values, ddof=1) / np.sqrt(values.size))


@dataclass(frozen=True)
class MetricsRow:
    task_learned: int
    task_eval: int
    rmse: float
    nlpd: float
    wall_ms: int
    ece: Optional[float] = None

    def __post_init__(self):
        if self.rmse < 0.0:
            raise InputError("rmse cannot be negative")
        if self.ece is not None and not 0.0 <= self.ece <= 1.0:
            raise InputError("ece must lie in [0, 1]")


@dataclass
class MetricsReport:
    """Metrics for every (task learned, task evaluated) pair."""

    rows: List[MetricsRow] = field(default_factory=list)

    def add(self, row: MetricsRow) -> None:
        self.rows.append(row)

    def column(self, name: str, task_learned: Optional[int] = None) -> np.ndarray:
        rows = [r for r in self.rows if task_learned is None or r.task_learned == task_learned]
        return np.array([getattr(r, name) for r in rows], dtype=float)

    def write_csv(self, stream: TextIO) -> None:
        """Rows as `task_learned,task_eval,rmse,nlpd,wall_ms` with repr floats."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([r.task_learned, r.task_eval, repr(r.rmse), repr(r.nlpd), r.wall_ms])
