"""
HiPPO Basis Module for streamgp

This module implements the HiPPO measure/basis families (LegS, LegT, LagT,
FouT): the operator matrices A(t), B(t) of the coefficient ODE
dc/dt = A(t) c + B(t) y(t), the basis functions g_m^(t) and measures
omega^(t), the one-step discretizations (forward Euler, bilinear), finite-basis
reconstruction and a Gauss-Legendre reference for projection coefficients.

Every recurrence in the package (signal coefficients, K_fu rows, random
Fourier features) goes through `transition` / `apply_transition`, so they all
share one discretization.

High cohesion: Contains only polynomial-projection machinery.
Low coupling: Depends only on constants, errors and logger.
"""

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import linalg as sla

from .constants import DEFAULT_QUADRATURE_NODES, GRID_RTOL
from .errors import InputError
from .logger import get_logger

logger = get_logger("hippo")


class BasisFamily(Enum):
    """HiPPO measure/basis pairs."""

    LEGS = "legs"
    LEGT = "legt"
    LAGT = "lagt"
    FOUT = "fout"

    @classmethod
    def parse(cls, name: str) -> "BasisFamily":
        key = name.strip().lower()
        for family in cls:
            if family.value == key:
                return family
        raise InputError(f"Unknown basis family: {name!r}")

    @property
    def time_varying(self) -> bool:
        return self is BasisFamily.LEGS


class Scheme(Enum):
    """
    ODE discretization schemes.

    BILINEAR averages the source over both endpoints (trapezoidal). BILINEAR_LEFT
    takes dt B(t) y(t + dt); it is first order whenever B varies in time (LegS).
    """

    EULER = "euler"
    BILINEAR = "bilinear"
    BILINEAR_LEFT = "bilinear-left"

    @classmethod
    def parse(cls, name) -> "Scheme":
        if isinstance(name, Scheme):
            return name
        key = name.strip().lower().replace("_", "-")
        if key in ("euler", "forward-euler"):
            return cls.EULER
        if key in ("bilinear", "tustin", "trapezoid"):
            return cls.BILINEAR
        if key == "bilinear-left":
            return cls.BILINEAR_LEFT
        raise InputError(f"Unknown discretization scheme: {name!r}")


@dataclass(frozen=True)
class HippoOperator:
    """
    A basis family at a fixed order.

    Attributes:
        family: Measure/basis pair
        order: Number of basis functions M (FouT: frequencies 0..M-1)
        theta: Window length for LegT/FouT, timescale for LagT (ignored by LegS)
    """

    family: BasisFamily
    order: int
    theta: float = 1.0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            logger.error(f"Invalid HiPPO order: {self.order}")
            raise InputError("order must be a positive integer")
        if not self.theta > 0.0:
            logger.error(f"Invalid HiPPO window: {self.theta}")
            raise InputError("theta must be positive")

    @property
    def state_dim(self) -> int:
        """Length of the coefficient vector (FouT stores cos/sin pairs)."""
        if self.family is BasisFamily.FOUT:
            return 2 * (self.order - 1) + 1
        return self.order


@dataclass(frozen=True, eq=False)
class Transition:
    """
    One discretized step c' = F c + g_prev y(t) + g_next y(t + dt).
    """

    F: np.ndarray
    g_prev: np.ndarray
    g_next: np.ndarray


@dataclass(frozen=True, eq=False)
class CoefficientState:
    """
    Projection coefficients of a scalar signal up to end_time.

    Attributes:
        coeffs: (state_dim,) coefficient vector c(t)
        end_time: t, a multiple of step
        scheme: Discretization used for every step
        step: Step size dt
        last_input: Signal value at end_time (needed by the bilinear scheme)
    """

    coeffs: np.ndarray
    end_time: float
    scheme: Scheme
    step: float
    last_input: Optional[float] = None


def _legs_matrix(order: int) -> np.ndarray:
    idx = np.arange(order)
    scale = np.sqrt(2 * idx + 1)
    A = -np.outer(scale, scale)
    A = np.tril(A, k=-1)
    A[idx, idx] = -(idx + 1)
    return A


def _legt_matrix(order: int) -> np.ndarray:
    idx = np.arange(order)
    scale = np.sqrt(2 * idx + 1)
    sign = np.where(idx[:, None] >= idx[None, :], 1.0, (-1.0) ** (idx[:, None] - idx[None, :]))
    return sign * np.outer(scale, scale)


def _fout_matrices(order: int, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    dim = 2 * (order - 1) + 1
    A = np.zeros((dim, dim))
    B = np.zeros(dim)
    cos_channels = [0] + [2 * m - 1 for m in range(1, order)]
    sin_channels = [2 * m for m in range(1, order)]
    for i in cos_channels:
        A[i, cos_channels] = -1.0 / theta
    for i in sin_channels:
        A[i, sin_channels] = -1.0 / theta
    for m in range(1, order):
        freq = 2.0 * np.pi * m / theta
        A[2 * m - 1, 2 * m] -= freq
        A[2 * m, 2 * m - 1] += freq
    B[cos_channels] = 1.0 / theta
    return A, B


def operator_matrices(op: HippoOperator, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    A(t) and B(t) of the coefficient ODE.

    LegS: A(t) = A / t with A_mk = -sqrt((2m+1)(2k+1)) (m > k), -(m+1) (m = k),
    0 (m < k); B(t)_m = sqrt(2m+1) / t. The other families are time invariant.

    Args:
        op: HiPPO operator
        t: End time of the history

    Returns:
        (A_t, B_t) with shapes (D, D) and (D,)

    Raises:
        InputError: If t <= 0 for LegS
    """
    M = op.order
    if op.family is BasisFamily.LEGS:
        if not t > 0.0:
            logger.error(f"LegS operator requested at t={t}")
            raise InputError("LegS operator matrices need t > 0")
        return _legs_matrix(M) / t, np.sqrt(2 * np.arange(M) + 1) / t
    if op.family is BasisFamily.LEGT:
        return -_legt_matrix(M) / op.theta, np.sqrt(2 * np.arange(M) + 1) / op.theta
    if op.family is BasisFamily.LAGT:
        return -np.tril(np.ones((M, M))) / op.theta, np.ones(M) / op.theta
    return _fout_matrices(M, op.theta)


def legendre_values(order: int, z: np.ndarray) -> np.ndarray:
    """P_0..P_{order-1} at z by the three-term recurrence; shape (order, len(z))."""
    z = np.asarray(z, dtype=float)
    out = np.empty((order,) + z.shape)
    out[0] = 1.0
    if order > 1:
        out[1] = z
    for k in range(1, order - 1):
        out[k + 1] = ((2 * k + 1) * z * out[k] - k * out[k - 1]) / (k + 1)
    return out


def laguerre_values(order: int, s: np.ndarray) -> np.ndarray:
    """L_0..L_{order-1} at s by the three-term recurrence; shape (order, len(s))."""
    s = np.asarray(s, dtype=float)
    out = np.empty((order,) + s.shape)
    out[0] = 1.0
    if order > 1:
        out[1] = 1.0 - s
    for k in range(1, order - 1):
        out[k + 1] = ((2 * k + 1 - s) * out[k] - k * out[k - 1]) / (k + 1)
    return out


def basis_matrix(op: HippoOperator, t: float, x) -> np.ndarray:
    """
    All basis functions g_j^(t) at x; shape (state_dim, len(x)).

    The formulas extend outside the measure support; the measure is what
    vanishes there.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    M = op.order
    if op.family is BasisFamily.LEGS:
        if not t > 0.0:
            raise InputError("LegS basis needs t > 0")
        z = 2.0 * x / t - 1.0
        return np.sqrt(2 * np.arange(M) + 1)[:, None] * legendre_values(M, z)
    if op.family is BasisFamily.LEGT:
        z = 2.0 * (x - t) / op.theta + 1.0
        return np.sqrt(2 * np.arange(M) + 1)[:, None] * legendre_values(M, z)
    if op.family is BasisFamily.LAGT:
        return laguerre_values(M, (t - x) / op.theta)
    phase = 2.0 * np.pi * (t - x) / op.theta
    out = np.empty((op.state_dim, x.size))
    out[0] = 1.0
    for m in range(1, M):
        out[2 * m - 1] = np.cos(m * phase)
        out[2 * m] = np.sin(m * phase)
    return out


def basis_eval(op: HippoOperator, m: int, t: float, x) -> np.ndarray:
    """
    g_m^(t)(x) for one basis index.

    Raises:
        InputError: If m is outside 0..state_dim-1
    """
    if not 0 <= m < op.state_dim:
        raise InputError(f"basis index {m} outside 0..{op.state_dim - 1}")
    values = basis_matrix(op, t, x)[m]
    return values if np.ndim(x) else float(values[0])


def measure(op: HippoOperator, t: float, x) -> np.ndarray:
    """omega^(t)(x); zero outside the measure support."""
    x = np.asarray(x, dtype=float)
    if op.family is BasisFamily.LEGS:
        return np.where((x >= 0.0) & (x <= t), 1.0 / t, 0.0)
    if op.family is BasisFamily.LAGT:
        return np.where(x <= t, np.exp(-(t - x) / op.theta) / op.theta, 0.0)
    return np.where((x >= t - op.theta) & (x <= t), 1.0 / op.theta, 0.0)


def measure_support(op: HippoOperator, t: float) -> Tuple[float, float]:
    """Support of omega^(t) intersected with the recorded history [0, t]."""
    if op.family in (BasisFamily.LEGT, BasisFamily.FOUT):
        return max(0.0, t - op.theta), t
    return 0.0, t


def reconstruction_weights(op: HippoOperator) -> np.ndarray:
    """Weights turning coefficients into a reconstruction (FouT pairs count twice)."""
    weights = np.ones(op.state_dim)
    if op.family is BasisFamily.FOUT:
        weights[1:] = 2.0
    return weights


@lru_cache(maxsize=64)
def _invariant_transition(op: HippoOperator, dt: float, scheme: Scheme) -> Transition:
    A, B = operator_matrices(op, 1.0)
    return _build_transition(A, B, A, B, dt, scheme)


def _build_transition(A_now, B_now, A_next, B_next, dt: float, scheme: Scheme) -> Transition:
    dim = A_now.shape[0]
    eye = np.eye(dim)
    if scheme is Scheme.EULER:
        return Transition(eye + dt * A_now, np.zeros(dim), dt * B_now)
    lhs = eye - 0.5 * dt * A_next
    if scheme is Scheme.BILINEAR_LEFT:
        rhs = np.column_stack([eye + 0.5 * dt * A_now, np.zeros(dim), dt * B_now])
    else:
        rhs = np.column_stack([eye + 0.5 * dt * A_now, 0.5 * dt * B_now, 0.5 * dt * B_next])
    if np.allclose(lhs, np.tril(lhs)):
        sol = sla.solve_triangular(lhs, rhs, lower=True)
    else:
        sol = np.linalg.solve(lhs, rhs)
    return Transition(sol[:, :dim], sol[:, dim], sol[:, dim + 1])


def transition(op: HippoOperator, t: float, dt: float, scheme: Scheme) -> Transition:
    """
    Discretized step from t to t + dt.

    Forward Euler: c' = (I + dt A(t)) c + dt B(t) y(t + dt).
    Bilinear: (I - dt/2 A(t+dt)) c' = (I + dt/2 A(t)) c
              + dt/2 (B(t) y(t) + B(t+dt) y(t+dt)).
    Bilinear-left: same left-hand side, source dt B(t) y(t+dt).
    From the empty history (t = 0) both schemes use c(dt) = dt B(dt) y(dt),
    which for LegS is B y(dt).

    Args:
        op: HiPPO operator
        t: Current end time (>= 0)
        dt: Step size (> 0)
        scheme: Discretization

    Returns:
        Transition for this step
    """
    if not dt > 0.0:
        raise InputError("step size must be positive")
    if t < 0.0:
        raise InputError("time must be non-negative")
    scheme = Scheme.parse(scheme)
    if t == 0.0:
        _, B_first = operator_matrices(op, dt)
        dim = op.state_dim
        return Transition(np.zeros((dim, dim)), np.zeros(dim), dt * B_first)
    if not op.family.time_varying:
        return _invariant_transition(op, float(dt), scheme)
    A_now, B_now = operator_matrices(op, t)
    A_next, B_next = operator_matrices(op, t + dt)
    return _build_transition(A_now, B_now, A_next, B_next, dt, scheme)


def apply_transition(tr: Transition, coeffs: np.ndarray, y_prev, y_next) -> np.ndarray:
    """
    Advance independent signals stored as columns of a (D, K) matrix.

    Args:
        tr: Step from `transition`
        coeffs: (D, K) coefficients, one column per signal
        y_prev: (K,) inputs at the current time (ignored by Euler)
        y_next: (K,) inputs at the new time

    Returns:
        (D, K) advanced coefficients
    """
    out = tr.F @ coeffs + np.outer(tr.g_next, y_next)
    if np.any(tr.g_prev):
        out += np.outer(tr.g_prev, y_prev)
    return out


def grid_steps(t: float, dt: float) -> int:
    """
    Number of dt-steps that reach t.

    Raises:
        InputError: If t is not a multiple of dt
    """
    n = int(round(t / dt))
    if abs(n * dt - t) > GRID_RTOL * max(abs(t), dt):
        logger.error(f"Time {t} is not on the dt={dt} grid")
        raise InputError(f"time {t} is not a multiple of the step {dt}")
    return n


def initial_state(op: HippoOperator, dt: float, scheme="euler") -> CoefficientState:
    """Empty-history state at t = 0."""
    return CoefficientState(np.zeros(op.state_dim), 0.0, Scheme.parse(scheme), float(dt), None)


def step_coefficients(state: CoefficientState, op: HippoOperator, y_next: float) -> CoefficientState:
    """
    Advance projection coefficients by one step with the new signal value.

    Args:
        state: Current coefficients
        op: HiPPO operator
        y_next: Signal at end_time + step

    Returns:
        New state at end_time + step

    Raises:
        InputError: If y_next is not finite
    """
    y_next = float(y_next)
    if not np.isfinite(y_next):
        logger.error(f"Non-finite signal value at t={state.end_time + state.step}")
        raise InputError("signal values must be finite")
    n = grid_steps(state.end_time, state.step)
    tr = transition(op, n * state.step, state.step, state.scheme)
    y_prev = 0.0 if state.last_input is None else state.last_input
    coeffs = apply_transition(tr, state.coeffs[:, None], [y_prev], [y_next])[:, 0]
    return replace(state, coeffs=coeffs, end_time=(n + 1) * state.step, last_input=y_next)


def project_signal(signal: Callable[[np.ndarray], np.ndarray], op: HippoOperator, t: float,
                   dt: float, scheme="euler") -> CoefficientState:
    """
    Run the recurrence for a known signal from 0 to t on the dt grid.

    Args:
        signal: Vectorised y(x)
        op: HiPPO operator
        t: End time, a multiple of dt
        dt: Step size
        scheme: Discretization

    Returns:
        Coefficient state at t
    """
    n = grid_steps(t, dt)
    values = np.asarray(signal(dt * np.arange(1, n + 1)), dtype=float)
    state = initial_state(op, dt, scheme)
    for i in range(n):
        state = step_coefficients(state, op, values[i])
    return state


def reconstruct(state, op: HippoOperator, x) -> np.ndarray:
    """
    Finite-basis reconstruction sum_m c_m g_m^(t)(x).

    Args:
        state: CoefficientState, or a bare coefficient vector paired with its end time
            as (coeffs, t)
        op: HiPPO operator
        x: Points inside the measure support

    Returns:
        Reconstructed values at x
    """
    if isinstance(state, CoefficientState):
        coeffs, t = state.coeffs, state.end_time
    else:
        coeffs, t = state
    values = (reconstruction_weights(op) * np.asarray(coeffs)) @ basis_matrix(op, t, x)
    return values if np.ndim(x) else float(values[0])


def gauss_legendre(a: float, b: float, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    if nodes < 2:
        raise InputError("quadrature needs at least two nodes")
    z, w = npleg.leggauss(nodes)
    return 0.5 * (b - a) * z + 0.5 * (b + a), 0.5 * (b - a) * w


def quadrature_weights(op: HippoOperator, t: float, nodes: int = DEFAULT_QUADRATURE_NODES
                       ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes x_q and the matrix W with W[j, q] = g_j(x_q) omega(x_q) w_q, so that
    integral y(x) phi_j(x) dx ~ W @ y(x_q).
    """
    lo, hi = measure_support(op, t)
    x, w = gauss_legendre(lo, hi, nodes)
    return x, basis_matrix(op, t, x) * (measure(op, t, x) * w)[None, :]


def quadrature_coefficients(signal: Callable[[np.ndarray], np.ndarray], op: HippoOperator,
                            t: float, nodes: int = DEFAULT_QUADRATURE_NODES) -> np.ndarray:
    """
    Reference projection coefficients integral y(x) g_m^(t)(x) omega^(t)(x) dx
    by Gauss-Legendre quadrature over the recorded support.

    Args:
        signal: Vectorised y(x)
        op: HiPPO operator
        t: End time (> 0)
        nodes: Quadrature nodes (>= 2)

    Returns:
        (state_dim,) coefficients
    """
    x, W = quadrature_weights(op, t, nodes)
    return W @ np.asarray(signal(x), dtype=float)
