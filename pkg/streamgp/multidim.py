"""
Multidimensional Input Module for streamgp

Non-sequential inputs get a pseudo-time: each task's points are put in an
order, the i-th point of the stream is placed at time i * dt, and the HiPPO
recurrences then run along that path with the ordered inputs as sources.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .errors import InputError
from .hippo import HippoOperator
from .interdomain import FeatureState, KfuRows, advance_features, advance_kfu
from .kernels import Kernel, as_points, kernel_matrix
from .logger import get_logger

logger = get_logger("multidim")


class OrderingKind(Enum):
    RANDOM = "random"
    K_MAX = "k_max"
    K_MIN = "k_min"
    BY_DIMENSION = "by_dimension"
    BY_L2 = "by_l2"


@dataclass(frozen=True)
class OrderingStrategy:
    """
    How points within a task are ordered along the pseudo-time axis.

    Attributes:
        kind: Ordering rule
        seed: Seed for the random ordering
        dimension: Column used by by_dimension
    """

    kind: OrderingKind
    seed: int = 0
    dimension: int = 0

    def __post_init__(self):
        if self.dimension < 0:
            raise InputError("dimension index must be non-negative")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "OrderingStrategy":
        """
        Parse `random`, `k_max`, `k_min`, `by_l2` or `by_dimension[:d]`.

        Raises:
            InputError: For an unknown name or a malformed dimension
        """
        name, _, arg = text.strip().lower().partition(":")
        name = name.replace("-", "_")
        try:
            kind = OrderingKind(name)
        except ValueError:
            raise InputError(f"Unknown ordering strategy: {text!r}") from None
        dimension = 0
        if arg:
            if kind is not OrderingKind.BY_DIMENSION or not arg.isdigit():
                raise InputError(f"Malformed ordering strategy: {text!r}")
            dimension = int(arg)
        return cls(kind, seed, dimension)


def _greedy_order(X: np.ndarray, kernel: Kernel, start: np.ndarray, maximize: bool) -> np.ndarray:
    remaining = list(range(X.shape[0]))
    order = []
    current = start
    while remaining:
        sims = kernel_matrix(kernel, current[None, :], X[remaining])[0]
        pick = int(np.argmax(sims) if maximize else np.argmin(sims))
        index = remaining.pop(pick)
        order.append(index)
        current = X[index]
    return np.array(order, dtype=int)


def order_points(X, strategy: OrderingStrategy, kernel: Optional[Kernel] = None,
                 prev_anchor=None) -> np.ndarray:
    """
    Permutation of a task's points along the pseudo-time axis.

    The kernel rules are greedy chains: starting from prev_anchor (the origin
    when absent) the next point is the remaining one with the largest
    (k_max) or smallest (k_min) kernel value to the current point. Points are
    used without replacement and ties go to the lowest index.

    Args:
        X: (n, d) task inputs
        strategy: Ordering rule
        kernel: Required by k_max and k_min
        prev_anchor: Last point of the previous task

    Returns:
        Integer permutation of 0..n-1

    Raises:
        InputError: If X is empty, the kernel is missing or the dimension is out of range
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n == 0:
        raise InputError("cannot order an empty task")
    kind = strategy.kind
    if kind is OrderingKind.RANDOM:
        return np.random.default_rng(strategy.seed).permutation(n)
    if kind is OrderingKind.BY_DIMENSION:
        if strategy.dimension >= d:
            raise InputError(f"dimension {strategy.dimension} out of range for {d}-dimensional inputs")
        return np.argsort(X[:, strategy.dimension], kind="stable")
    if kind is OrderingKind.BY_L2:
        return np.argsort(np.linalg.norm(X, axis=1), kind="stable")
    if kernel is None:
        raise InputError(f"ordering {kind.value} needs a kernel")
    start = np.zeros(d) if prev_anchor is None else np.asarray(prev_anchor, dtype=float).reshape(d)
    return _greedy_order(X, kernel, start, maximize=kind is OrderingKind.K_MAX)


def assign_pseudo_times(task_index: int, counts_so_far: int, n: int, dt: float) -> np.ndarray:
    """
    Pseudo-times (offset + i) dt, i = 1..n, offset = points seen in earlier tasks.
    """
    if not dt > 0.0:
        raise InputError("dt must be positive")
    if counts_so_far < 0 or n < 0:
        raise InputError("counts must be non-negative")
    logger.debug(f"Task {task_index}: pseudo-times from index {counts_so_far + 1} to {counts_so_far + n}")
    return dt * np.arange(counts_so_far + 1, counts_so_far + n + 1, dtype=float)


def strided_sources(ordered_X: np.ndarray, stride: int) -> np.ndarray:
    """Every stride-th ordered point, starting with the first."""
    if int(stride) != stride or stride < 1:
        raise InputError("stride must be a positive integer")
    return np.asarray(ordered_X)[::int(stride)]


def strided_kfu_step(rows: Optional[KfuRows], features: Optional[FeatureState], ordered_X, stride: int,
                     op: HippoOperator, kernel: Kernel, dt: float, scheme="euler"
                     ) -> Tuple[Optional[KfuRows], Optional[FeatureState]]:
    """
    Advance K_fu rows and feature states along an ordered task with step stride * dt,
    using every stride-th point as the source.

    Args:
        rows: K_fu rows to advance (or None)
        features: Feature state to advance (or None)
        ordered_X: (n, d) task inputs in pseudo-time order
        stride: Positive integer s
        op: HiPPO operator
        kernel: Covariance function
        dt: Base step size
        scheme: Discretization

    Returns:
        (rows, features) after ceil(n / s) steps
    """
    ordered_X = as_points(ordered_X, kernel.input_dim)
    sources = strided_sources(ordered_X, stride)
    step = stride * dt
    if rows is not None:
        rows = advance_kfu(rows, op, kernel, step, scheme, sources=sources)
    if features is not None:
        features = advance_features(features, op, step, scheme, sources=sources)
    return rows, features
