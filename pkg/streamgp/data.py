"""
Data Module for streamgp

CSV ingestion and emission for time-series (`t,y`) and multidimensional
(`x1,...,xd,y`) datasets, the synthetic benchmark generators and the
deterministic train/test split used by the experiments.
"""

import csv
from typing import Callable, Dict, Tuple

import numpy as np

from .constants import EVAL_STRIDE
from .errors import DataError, InputError
from .gp import DataBatch
from .logger import get_logger

logger = get_logger("data")

SYNTHETIC_KINDS = ("sine-drift", "piecewise", "two-cluster-2d")


def load_csv(path: str, mode: str = "timeseries") -> DataBatch:
    """
    Read a dataset.

    Time series files have the header `t,y` with t non-decreasing;
    multidimensional files have `x1,...,xd,y`.

    Args:
        path: CSV file
        mode: "timeseries" or "multidim"

    Returns:
        DataBatch (with timestamps in timeseries mode)

    Raises:
        DataError: On a missing file, bad header, unparsable or non-finite
            value, or decreasing time; the message names the line
    """
    if mode not in ("timeseries", "multidim"):
        raise InputError(f"unknown dataset mode {mode!r}")
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise DataError("file is empty", 1)

    header = [h.strip() for h in rows[0]]
    if mode == "timeseries":
        if header != ["t", "y"]:
            raise DataError(f"expected header 't,y', got {','.join(header)!r}", 1)
    else:
        d = len(header) - 1
        expected = [f"x{i}" for i in range(1, d + 1)] + ["y"]
        if d < 1 or header != expected:
            raise DataError(f"expected header 'x1,...,xd,y', got {','.join(header)!r}", 1)

    width = len(header)
    values = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != width:
            raise DataError(f"expected {width} columns, got {len(row)}", line)
        try:
            parsed = [float(cell) for cell in row]
        except ValueError:
            raise DataError(f"unparsable value in {','.join(row)!r}", line) from None
        if not all(np.isfinite(parsed)):
            raise DataError("non-finite value", line)
        if mode == "timeseries" and values and parsed[0] < values[-1][0]:
            raise DataError(f"time {parsed[0]!r} is smaller than the previous row", line)
        values.append(parsed)
    if not values:
        raise DataError("no data rows", 2)

    table = np.array(values)
    logger.info(f"Loaded {table.shape[0]} rows from {path}")
    if mode == "timeseries":
        return DataBatch(table[:, :1], table[:, 1], table[:, 0])
    return DataBatch(table[:, :-1], table[:, -1])


def write_csv(batch: DataBatch, path: str, mode: str = "timeseries") -> None:
    """Write a dataset with repr floats so that load_csv reads back identical values."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if mode == "timeseries":
            writer.writerow(["t", "y"])
            times = batch.timestamps if batch.timestamps is not None else batch.X[:, 0]
            for t, y in zip(times, batch.y):
                writer.writerow([repr(float(t)), repr(float(y))])
        else:
            writer.writerow([f"x{i}" for i in range(1, batch.input_dim + 1)] + ["y"])
            for x, y in zip(batch.X, batch.y):
                writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def sine_drift_function(t: np.ndarray) -> np.ndarray:
    """sin(2 pi f(t) t) with the frequency drifting from 2 to 5 over (0, 1]."""
    return np.sin(2.0 * np.pi * (2.0 + 3.0 * t) * t)


def piecewise_function(t: np.ndarray) -> np.ndarray:
    """Smooth oscillation with level shifts at t = 0.5 and t = 0.75."""
    return np.sin(4.0 * np.pi * t) + 1.0 * (t > 0.5) - 1.5 * (t > 0.75)


def cluster_function(X: np.ndarray) -> np.ndarray:
    return np.sin(X[:, 0]) + np.cos(X[:, 1])


SIGNALS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sine-drift": sine_drift_function,
    "piecewise": piecewise_function,
}


def generate_synthetic(kind: str, n: int, noise_sd: float, seed: int) -> DataBatch:
    """
    Synthetic benchmark data, deterministic under seed.

    sine-drift and piecewise sample t_i = i / n on (0, 1]. two-cluster-2d puts
    the first half of the points around (-2, -2) and the second half around
    (2, 2), with target sin(x1) + cos(x2).

    Raises:
        InputError: For an unknown kind, n < 1 or negative noise
    """
    if kind not in SYNTHETIC_KINDS:
        raise InputError(f"unknown synthetic kind {kind!r}; expected one of {', '.join(SYNTHETIC_KINDS)}")
    if n < 1:
        raise InputError("n must be positive")
    if noise_sd < 0.0:
        raise InputError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    if kind == "two-cluster-2d":
        first = n // 2
        centers = np.vstack([np.tile([-2.0, -2.0], (first, 1)), np.tile([2.0, 2.0], (n - first, 1))])
        X = centers + 0.5 * rng.standard_normal((n, 2))
        return DataBatch(X, cluster_function(X) + noise_sd * rng.standard_normal(n))
    t = np.arange(1, n + 1) / n
    y = SIGNALS[kind](t) + noise_sd * rng.standard_normal(n)
    return DataBatch(t[:, None], y, t)


def eval_split(batch: DataBatch, stride: int = EVAL_STRIDE) -> Tuple[DataBatch, DataBatch]:
    """Every stride-th point (the 5th, 10th, ...) is held out for testing."""
    index = np.arange(batch.size)
    test = (index % stride) == stride - 1
    return batch.subset(~test), batch.subset(test)
