"""
Interdomain Covariance Module for streamgp

This module evolves the prior covariances of HiPPO inducing variables
u_m = integral f(x) phi_m^(t)(x) dx alongside the stream:

- K_fu rows: [K_fu]_{n,m} is the projection of the signal x -> k(x_n, x), so it
  follows the same recurrence as any projection coefficient.
- K_uu: a double integral that random Fourier features factorise into
  projections of cos(w.x) and sin(w.x); the feature coefficients Z evolve by the
  recurrence and K_uu = sigma_f^2 / N * Z Z^T.
- A direct matrix ODE for K_uu (LegS, Euler only), kept as a numerically
  fragile reference.
- Gauss-Legendre oracles for all of the above.

Every recurrence consumes a sequence of source points, one per step: the step
times themselves for time series, or the ordered inputs along the pseudo-time
path for multidimensional data.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .constants import DEFAULT_QUADRATURE_NODES, GRID_RTOL
from .errors import InputError, StateError, UnsupportedFamilyError
from .hippo import (BasisFamily, HippoOperator, Scheme, apply_transition, grid_steps,
                    operator_matrices, quadrature_weights, transition)
from .kernels import FrequencyDraws, Kernel, as_points, kernel_diag, kernel_matrix
from .linalg import symmetrize
from .logger import get_logger

logger = get_logger("interdomain")


@dataclass(frozen=True, eq=False)
class KfuRows:
    """
    K_fu rows for a block of anchor inputs.

    Attributes:
        anchors: (n, d) inputs x_n
        rows: (n, state_dim) rows [K_fu^(t)]_{n,:}
        end_time: t
        last_source: Source point consumed at end_time (None at t = 0)
    """

    anchors: np.ndarray
    rows: np.ndarray
    end_time: float
    last_source: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.anchors.shape[0])


@dataclass(frozen=True, eq=False)
class FeatureState:
    """
    HiPPO coefficients of the random Fourier feature signals.

    Attributes:
        frequencies: Shared spectral draws (N samples)
        cos_features: (state_dim, N) projections of cos(w_n . x)
        sin_features: (state_dim, N) projections of sin(w_n . x)
        end_time: t
        last_source: Source point consumed at end_time
        checkpoints: ((time, cos_features, sin_features), ...) increasing in time
    """

    frequencies: FrequencyDraws
    cos_features: np.ndarray
    sin_features: np.ndarray
    end_time: float
    last_source: Optional[np.ndarray] = None
    checkpoints: Tuple[Tuple[float, np.ndarray, np.ndarray], ...] = ()


@dataclass(frozen=True, eq=False)
class KuuDirectOdeState:
    """
    K_uu integrated directly as a matrix ODE.

    Attributes:
        kuu: (M, M) symmetric matrix
        boundary_coeffs: c(t) = integral k(t, x) phi^(t)(x) dx used by the last step
        end_time: t
    """

    kuu: np.ndarray
    boundary_coeffs: np.ndarray
    end_time: float


def time_sources(start: float, dt: float, n_steps: int) -> np.ndarray:
    """Grid times after start, as an (n_steps, 1) array of source points."""
    first = grid_steps(start, dt)
    return (dt * np.arange(first + 1, first + n_steps + 1))[:, None]


def _run_recurrence(op: HippoOperator, coeffs: np.ndarray, start: float, dt: float, scheme: Scheme,
                    values: np.ndarray, prev_values: Optional[np.ndarray]) -> Tuple[np.ndarray, float]:
    """
    Advance independent signals (columns of coeffs) through len(values) steps.

    values[i] holds the signals at step i + 1 after start; prev_values the
    signals at start. Times are rebuilt from the step index so that
    incremental and one-shot integration agree bit for bit.
    """
    first = grid_steps(start, dt)
    prev = np.zeros(coeffs.shape[1]) if prev_values is None else prev_values
    for i in range(values.shape[0]):
        tr = transition(op, (first + i) * dt, dt, scheme)
        coeffs = apply_transition(tr, coeffs, prev, values[i])
        prev = values[i]
    return coeffs, (first + values.shape[0]) * dt


def _resolve_sources(sources, start: float, dt: float, n_steps: Optional[int], input_dim: int) -> np.ndarray:
    if sources is None:
        if n_steps is None:
            raise InputError("either sources or a step count is required")
        if input_dim != 1:
            raise InputError("multidimensional inputs need explicit source points")
        return time_sources(start, dt, n_steps)
    return as_points(sources, input_dim)


def empty_kfu(anchors, op: HippoOperator, kernel: Kernel) -> KfuRows:
    """Rows at t = 0 (empty history)."""
    anchors = as_points(anchors, kernel.input_dim)
    return KfuRows(anchors, np.zeros((anchors.shape[0], op.state_dim)), 0.0, None)


def advance_kfu(rows: KfuRows, op: HippoOperator, kernel: Kernel, dt: float, scheme="euler",
                sources=None, n_steps: Optional[int] = None) -> KfuRows:
    """
    Advance K_fu rows through several steps.

    Args:
        rows: Current rows
        op: HiPPO operator
        kernel: Covariance function
        dt: Step size
        scheme: Discretization
        sources: (n_steps, d) source points, one per step (default: the step times)
        n_steps: Step count when sources is omitted

    Returns:
        Rows at end_time + n_steps * dt
    """
    scheme = Scheme.parse(scheme)
    sources = _resolve_sources(sources, rows.end_time, dt, n_steps, kernel.input_dim)
    if sources.shape[0] == 0:
        return rows
    values = kernel_matrix(kernel, sources, rows.anchors)
    prev = None
    if rows.last_source is not None:
        prev = kernel_matrix(kernel, rows.last_source[None, :], rows.anchors)[0]
    coeffs, end_time = _run_recurrence(op, rows.rows.T, rows.end_time, dt, scheme, values, prev)
    return replace(rows, rows=coeffs.T, end_time=end_time, last_source=sources[-1].copy())


def step_kfu(rows: KfuRows, op: HippoOperator, kernel: Kernel, dt: float, scheme="euler",
             source=None) -> KfuRows:
    """
    One step of the K_fu recurrence with source k(x_n, s), s the new source point
    (the new time t + dt by default).
    """
    if source is None:
        return advance_kfu(rows, op, kernel, dt, scheme, n_steps=1)
    return advance_kfu(rows, op, kernel, dt, scheme, sources=np.atleast_2d(source))


def backfill_kfu(x_new, op: HippoOperator, kernel: Kernel, end_time: float, dt: float,
                 scheme="euler", sources=None) -> KfuRows:
    """
    Rows for new anchors, integrated from t = 0 to end_time.

    Only kernel evaluations against the source path are needed, never old
    targets, so new training inputs and test inputs can join at any time.

    Args:
        x_new: (n, d) new anchors
        op: HiPPO operator
        kernel: Covariance function
        end_time: Time to integrate to (> 0, on the dt grid)
        dt: Step size
        scheme: Discretization
        sources: Source path up to end_time (default: the step times)

    Returns:
        KfuRows at end_time
    """
    if not end_time > 0.0:
        raise InputError("backfill needs end_time > 0")
    n_steps = grid_steps(end_time, dt)
    rows = empty_kfu(x_new, op, kernel)
    if sources is not None:
        sources = as_points(sources, kernel.input_dim)
        if sources.shape[0] != n_steps:
            raise InputError(f"source path has {sources.shape[0]} points, expected {n_steps}")
    return advance_kfu(rows, op, kernel, dt, scheme, sources=sources, n_steps=n_steps)


def initial_features(op: HippoOperator, draws: FrequencyDraws) -> FeatureState:
    """Feature coefficients at t = 0."""
    zeros = np.zeros((op.state_dim, draws.n_samples))
    return FeatureState(draws, zeros, zeros.copy(), 0.0)


def advance_features(fs: FeatureState, op: HippoOperator, dt: float, scheme="euler",
                     sources=None, n_steps: Optional[int] = None) -> FeatureState:
    """
    Advance every feature column through several steps; cosine columns take
    source cos(w_n . s), sine columns sin(w_n . s).
    """
    scheme = Scheme.parse(scheme)
    W = fs.frequencies.frequencies
    sources = _resolve_sources(sources, fs.end_time, dt, n_steps, W.shape[1])
    if sources.shape[0] == 0:
        return fs
    N = fs.frequencies.n_samples
    phase = sources @ W.T
    values = np.hstack([np.cos(phase), np.sin(phase)])
    prev = None
    if fs.last_source is not None:
        prev_phase = W @ fs.last_source
        prev = np.concatenate([np.cos(prev_phase), np.sin(prev_phase)])
    coeffs = np.hstack([fs.cos_features, fs.sin_features])
    coeffs, end_time = _run_recurrence(op, coeffs, fs.end_time, dt, scheme, values, prev)
    return replace(fs, cos_features=coeffs[:, :N], sin_features=coeffs[:, N:],
                   end_time=end_time, last_source=sources[-1].copy())


def step_features(fs: FeatureState, op: HippoOperator, dt: float, scheme="euler", source=None) -> FeatureState:
    """One step of the feature recurrence."""
    if source is None:
        return advance_features(fs, op, dt, scheme, n_steps=1)
    return advance_features(fs, op, dt, scheme, sources=np.atleast_2d(source))


def checkpoint_features(fs: FeatureState) -> FeatureState:
    """
    Snapshot the current features so later cross-time covariances can use them.

    Raises:
        StateError: If a checkpoint newer than end_time already exists
    """
    if fs.checkpoints:
        last_time = fs.checkpoints[-1][0]
        if _same_time(last_time, fs.end_time):
            return fs
        if last_time > fs.end_time:
            raise StateError("checkpoints must be increasing in time")
    snap = (fs.end_time, fs.cos_features.copy(), fs.sin_features.copy())
    return replace(fs, checkpoints=fs.checkpoints + (snap,))


def _same_time(a: float, b: float) -> bool:
    return abs(a - b) <= GRID_RTOL * max(abs(a), abs(b), 1.0)


def _features_at(fs: FeatureState, time: float) -> Tuple[np.ndarray, np.ndarray]:
    if _same_time(time, fs.end_time):
        return fs.cos_features, fs.sin_features
    for snap_time, cos_f, sin_f in fs.checkpoints:
        if _same_time(snap_time, time):
            return cos_f, sin_f
    logger.error(f"No feature checkpoint at t={time}; have {[c[0] for c in fs.checkpoints]}")
    raise StateError(f"no feature checkpoint stored at time {time}")


def assemble_kuu(fs: FeatureState, kernel: Kernel) -> np.ndarray:
    """K_uu^(t) = sigma_f^2 / N (Zc Zc^T + Zs Zs^T)."""
    Zc, Zs = fs.cos_features, fs.sin_features
    gram = Zc @ Zc.T + Zs @ Zs.T
    return symmetrize(kernel.output_scale_sq * gram / fs.frequencies.n_samples)


def cross_kuu(fs: FeatureState, t_old: float, kernel: Kernel) -> np.ndarray:
    """
    Cov(u^(t_old), u^(t)) from the checkpointed and current features.

    Rows index the old inducing variables, columns the current ones.

    Raises:
        StateError: If t_old is neither a checkpoint nor the current time
    """
    old_cos, old_sin = _features_at(fs, t_old)
    gram = old_cos @ fs.cos_features.T + old_sin @ fs.sin_features.T
    out = kernel.output_scale_sq * gram / fs.frequencies.n_samples
    if _same_time(t_old, fs.end_time):
        out = symmetrize(out)
    return out


def feature_kfu(fs: FeatureState, X, kernel: Kernel) -> np.ndarray:
    """
    (n, state_dim) Cov(f(x_n), u^(t)) under the random feature prior,
    sigma_f^2 / N (cos(X W^T) Zc^T + sin(X W^T) Zs^T).

    Uses the same draws as assemble_kuu, so [K_uu, K_uf; K_fu, k_ff] is a
    valid covariance and the Nystrom residual k_ff - Q_ff stays non-negative.
    """
    X = as_points(X, fs.frequencies.frequencies.shape[1])
    phase = X @ fs.frequencies.frequencies.T
    gram = np.cos(phase) @ fs.cos_features.T + np.sin(phase) @ fs.sin_features.T
    return kernel.output_scale_sq * gram / fs.frequencies.n_samples


def initial_kuu_direct(op: HippoOperator) -> KuuDirectOdeState:
    """Zero K_uu at t = 0."""
    if op.family is not BasisFamily.LEGS:
        raise UnsupportedFamilyError("the direct K_uu ODE is only derived for LegS")
    dim = op.state_dim
    return KuuDirectOdeState(np.zeros((dim, dim)), np.zeros(dim), 0.0)


def step_kuu_direct(state: KuuDirectOdeState, op: HippoOperator, kernel: Kernel, dt: float) -> KuuDirectOdeState:
    """
    Forward-Euler step of K' = A(t) K + K A(t)^T + B(t) c(t)^T + c(t) B(t)^T.

    c(t) is the K_fu row of the moving anchor x = t. It follows the K_fu
    recurrence with source k(t + dt, t + dt), so the anchor is re-sourced at
    every step instead of being integrated against its own history; this is
    where the method loses accuracy. From t = 0 both start with
    c(dt) = dt B(dt) k(dt, dt) and K(dt) = dt (B(dt) c(dt)^T + c(dt) B(dt)^T).

    Raises:
        UnsupportedFamilyError: For any family other than LegS
    """
    if op.family is not BasisFamily.LEGS:
        logger.error(f"Direct K_uu ODE requested for {op.family.value}")
        raise UnsupportedFamilyError("the direct K_uu ODE is only derived for LegS")
    if not dt > 0.0:
        raise InputError("step size must be positive")
    t = state.end_time
    source = kernel_diag(kernel, [[t + dt]])
    tr = transition(op, t, dt, Scheme.EULER)
    c_next = apply_transition(tr, state.boundary_coeffs[:, None], source, source)[:, 0]
    if t == 0.0:
        _, B = operator_matrices(op, dt)
        kuu = dt * (np.outer(B, c_next) + np.outer(c_next, B))
    else:
        A, B = operator_matrices(op, t)
        c = state.boundary_coeffs
        AK = A @ state.kuu
        kuu = state.kuu + dt * (AK + AK.T + np.outer(B, c) + np.outer(c, B))
    return KuuDirectOdeState(symmetrize(kuu), c_next, t + dt)


def direct_kuu(op: HippoOperator, kernel: Kernel, t: float, dt: float) -> np.ndarray:
    """K_uu^(t) from the direct matrix ODE, stepped from t = 0."""
    state = initial_kuu_direct(op)
    for _ in range(grid_steps(t, dt)):
        state = step_kuu_direct(state, op, kernel, dt)
    return state.kuu


def quadrature_kfu(kernel: Kernel, x_n, op: HippoOperator, t: float,
                   nodes: int = DEFAULT_QUADRATURE_NODES) -> np.ndarray:
    """Reference row: integral k(x_n, x) phi_m^(t)(x) dx by Gauss-Legendre quadrature."""
    x, W = quadrature_weights(op, t, nodes)
    values = kernel_matrix(kernel, x[:, None], as_points(x_n, 1))[:, 0]
    return W @ values


def quadrature_cross_kuu(kernel: Kernel, op: HippoOperator, t1: float, t2: float,
                         nodes: int = DEFAULT_QUADRATURE_NODES) -> np.ndarray:
    """Reference Cov(u^(t1), u^(t2)) by nested Gauss-Legendre quadrature."""
    x1, W1 = quadrature_weights(op, t1, nodes)
    x2, W2 = quadrature_weights(op, t2, nodes)
    return W1 @ kernel_matrix(kernel, x1[:, None], x2[:, None]) @ W2.T


def quadrature_kuu(kernel: Kernel, op: HippoOperator, t: float,
                   nodes: int = DEFAULT_QUADRATURE_NODES) -> np.ndarray:
    """Reference K_uu^(t) by nested Gauss-Legendre quadrature (symmetrized)."""
    return symmetrize(quadrature_cross_kuu(kernel, op, t, t, nodes))
