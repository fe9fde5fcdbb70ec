"""
GP Core Module for streamgp

This module implements exact GP regression, the collapsed SGPR bound and its
optimal q(u), SVGP prediction from any q(u), closed-form Gaussian KL, the
uncollapsed Gaussian ELBO, the log marginal likelihood with analytic gradients,
and type-II maximum-likelihood fitting.

All solves go through triangular factors; nothing forms an explicit inverse.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .constants import FIT_NOISE_FLOOR, NOISE_FLOOR
from .errors import InputError, NumericalError
from .kernels import Kernel, NoiseModel, as_points, kernel_diag, kernel_gradients, kernel_matrix
from .linalg import chol_logdet, jittered_cholesky, solve_lower, solve_upper, symmetrize
from .logger import get_logger

logger = get_logger("gp")

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GaussianDist:
    """
    Multivariate Gaussian N(mean, cov_chol cov_chol^T).

    Attributes:
        mean: (M,) mean vector
        cov_chol: (M, M) lower-triangular covariance factor
    """

    mean: np.ndarray
    cov_chol: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def cov(self) -> np.ndarray:
        return self.cov_chol @ self.cov_chol.T

    @classmethod
    def from_cov(cls, mean, cov, jitter: Optional[float] = None) -> "GaussianDist":
        """Factorise a covariance with the jitter policy."""
        return cls(np.asarray(mean, dtype=float), jittered_cholesky(symmetrize(np.asarray(cov)), jitter))

    @classmethod
    def from_factor(cls, mean, factor: np.ndarray) -> "GaussianDist":
        """
        Build from any square root F with cov = F F^T.

        The triangular factor comes from a QR decomposition of F^T, so no
        jitter is added.
        """
        r = np.linalg.qr(np.asarray(factor, dtype=float).T, mode="r")
        signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
        return cls(np.asarray(mean, dtype=float), (signs[:, None] * r).T)


@dataclass(frozen=True, eq=False)
class Predictive:
    """
    Predictive marginals, optionally with the full covariance.

    Attributes:
        mean: (n,) predictive means
        variance: (n,) predictive variances, floored at zero
        includes_noise: Whether the likelihood noise is included
        cov: (n, n) full covariance when requested
    """

    mean: np.ndarray
    variance: np.ndarray
    includes_noise: bool = False
    cov: Optional[np.ndarray] = None

    def with_noise(self, noise_variance: float) -> "Predictive":
        """Add observation noise to a latent predictive."""
        if self.includes_noise:
            return self
        cov = None if self.cov is None else self.cov + noise_variance * np.eye(self.cov.shape[0])
        return replace(self, variance=self.variance + noise_variance, includes_noise=True, cov=cov)


@dataclass(frozen=True, eq=False)
class DataBatch:
    """
    Observed data D = (X, y).

    Attributes:
        X: (n, d) inputs
        y: (n,) targets
        timestamps: Optional (n,) times for time-series data
    """

    X: np.ndarray
    y: np.ndarray
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            logger.error(f"Mismatched batch shapes X={X.shape}, y={y.shape}")
            raise InputError("X and y must have matching lengths")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("data contain non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=float).reshape(-1)
            if ts.shape[0] != y.shape[0]:
                raise InputError("timestamps must match the number of points")
            object.__setattr__(self, "timestamps", ts)

    @property
    def size(self) -> int:
        return int(self.y.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.X.shape[1])

    def subset(self, index) -> "DataBatch":
        ts = None if self.timestamps is None else self.timestamps[index]
        return DataBatch(self.X[index], self.y[index], ts)

    @staticmethod
    def concat(batches: List["DataBatch"]) -> "DataBatch":
        if not batches:
            raise InputError("nothing to concatenate")
        ts = None
        if all(b.timestamps is not None for b in batches):
            ts = np.concatenate([b.timestamps for b in batches])
        return DataBatch(np.vstack([b.X for b in batches]), np.concatenate([b.y for b in batches]), ts)


@dataclass(frozen=True)
class LMLTerms:
    """Log marginal likelihood split into its diagnostic terms."""

    data_fit: float
    complexity: float
    constant: float

    @property
    def total(self) -> float:
        return self.data_fit + self.complexity + self.constant


@dataclass
class FitTrace:
    """
    Record of a hyperparameter fit.

    Attributes:
        objective: LML after every accepted iteration (starting with the initial value)
        params: Log-parameters after every accepted iteration
        aborted: True if a non-finite objective stopped the fit
        message: Optimizer status text
    """

    objective: List[float] = field(default_factory=list)
    params: List[np.ndarray] = field(default_factory=list)
    aborted: bool = False
    message: str = ""


def _noisy_chol(kernel: Kernel, noise: NoiseModel, X: np.ndarray, jitter: Optional[float]) -> np.ndarray:
    K = kernel_matrix(kernel, X) + noise.noise_variance * np.eye(X.shape[0])
    return jittered_cholesky(K, 0.0 if jitter is None else jitter)


def gp_predict(kernel: Kernel, noise: NoiseModel, train: DataBatch, X_star,
               include_noise: bool = False, full_cov: bool = False,
               jitter: Optional[float] = None) -> Predictive:
    """
    Exact GP posterior predictive.

    mean = K*x (K + s^2 I)^-1 y, cov = K** - K*x (K + s^2 I)^-1 Kx*.

    Args:
        kernel: Covariance function
        noise: Likelihood noise
        train: Training data (may be empty)
        X_star: Test inputs
        include_noise: Add s^2 to the predictive variance
        full_cov: Also return the full covariance
        jitter: Extra diagonal for the factorization (escalated on failure)

    Returns:
        Predictive at X_star

    Raises:
        NumericalError: If the factorization fails after jitter escalation
    """
    X_star = as_points(X_star, kernel.input_dim)
    if train.size == 0:
        mean = np.zeros(X_star.shape[0])
        cov = kernel_matrix(kernel, X_star) if full_cov else None
        pred = Predictive(mean, kernel_diag(kernel, X_star), False, cov)
        return pred.with_noise(noise.noise_variance) if include_noise else pred

    L = _noisy_chol(kernel, noise, train.X, jitter)
    Kxs = kernel_matrix(kernel, train.X, X_star)
    V = solve_lower(L, Kxs)
    alpha = solve_lower(L, train.y)
    mean = V.T @ alpha
    variance = np.maximum(kernel_diag(kernel, X_star) - np.sum(V ** 2, axis=0), 0.0)
    cov = symmetrize(kernel_matrix(kernel, X_star) - V.T @ V) if full_cov else None
    pred = Predictive(mean, variance, False, cov)
    return pred.with_noise(noise.noise_variance) if include_noise else pred


def lml_terms(kernel: Kernel, noise: NoiseModel, train: DataBatch,
              jitter: Optional[float] = None) -> LMLTerms:
    """
    log N(y; 0, K + s^2 I) as data fit -1/2 y^T (K + s^2 I)^-1 y,
    complexity -1/2 log|K + s^2 I| and constant -n/2 log 2 pi.

    Raises:
        InputError: If the batch is empty
        NumericalError: If the factorization fails after jitter escalation
    """
    if train.size < 1:
        raise InputError("the marginal likelihood needs at least one point")
    L = _noisy_chol(kernel, noise, train.X, jitter)
    alpha = solve_lower(L, train.y)
    return LMLTerms(-0.5 * float(alpha @ alpha), -0.5 * chol_logdet(L), -0.5 * train.size * LOG_2PI)


def log_marginal_likelihood(kernel: Kernel, noise: NoiseModel, train: DataBatch,
                            jitter: Optional[float] = None) -> float:
    """log p(y | X) of the exact GP."""
    return lml_terms(kernel, noise, train, jitter).total


def lml_and_gradient(kernel: Kernel, noise: NoiseModel, train: DataBatch,
                     jitter: Optional[float] = None) -> Tuple[float, np.ndarray]:
    """
    LML and its gradient w.r.t. (log lengthscales..., log sigma_f^2, log s^2).

    dLML/dtheta = 1/2 tr((a a^T - K^-1) dK/dtheta), a = K^-1 y.
    """
    L = _noisy_chol(kernel, noise, train.X, jitter)
    alpha = solve_upper(L, solve_lower(L, train.y))
    Linv = solve_lower(L, np.eye(train.size))
    inner = np.outer(alpha, alpha) - Linv.T @ Linv
    grads = kernel_gradients(kernel, train.X)
    grads.append(noise.noise_variance * np.eye(train.size))
    gradient = np.array([0.5 * float(np.sum(inner * dK)) for dK in grads])
    value = -0.5 * float(train.y @ alpha) - 0.5 * chol_logdet(L) - 0.5 * train.size * LOG_2PI
    return value, gradient


def _pack(kernel: Kernel, noise: NoiseModel) -> np.ndarray:
    return np.log(np.concatenate([kernel.lengthscales, [kernel.output_scale_sq, noise.noise_variance]]))


def _unpack(theta: np.ndarray, kernel: Kernel) -> Tuple[Kernel, NoiseModel]:
    values = np.exp(theta)
    d = kernel.input_dim
    return (replace(kernel, lengthscales=tuple(values[:d]), output_scale_sq=float(values[d])),
            NoiseModel(float(values[d + 1])))


class _NonFiniteObjective(Exception):
    pass


def fit_hyperparameters(kernel_init: Kernel, noise_init: NoiseModel, train: DataBatch,
                        max_iter: int = 200, tol: float = 1e-9,
                        callback: Optional[Callable[[int, float], None]] = None
                        ) -> Tuple[Kernel, NoiseModel, FitTrace]:
    """
    Type-II maximum likelihood over log-parameters with L-BFGS-B.

    The noise variance is bounded below by max(1e-6 var(y), NOISE_FLOOR).
    A non-finite objective stops the fit and returns the last accepted
    parameters.

    Args:
        kernel_init: Starting kernel (stationary)
        noise_init: Starting noise
        train: Training data (n >= 2)
        max_iter: Iteration cap
        tol: Relative objective tolerance
        callback: Called with (iteration, lml) after every accepted step

    Returns:
        (kernel, noise, trace)

    Raises:
        InputError: If fewer than two points are given
    """
    if train.size < 2:
        raise InputError("fitting needs at least two points")
    noise_floor = max(FIT_NOISE_FLOOR * float(np.var(train.y)), NOISE_FLOOR)
    theta0 = _pack(kernel_init, noise_init)
    theta0[-1] = max(theta0[-1], np.log(noise_floor))
    bounds = [(None, None)] * (theta0.size - 1) + [(np.log(noise_floor), None)]

    trace = FitTrace()
    cache = {}

    def objective(theta):
        key = theta.tobytes()
        if key not in cache:
            try:
                kernel, noise = _unpack(theta, kernel_init)
                value, grad = lml_and_gradient(kernel, noise, train)
            except (NumericalError, FloatingPointError) as exc:
                raise _NonFiniteObjective(str(exc)) from exc
            if not (np.isfinite(value) and np.all(np.isfinite(grad))):
                raise _NonFiniteObjective(f"objective {value} at {theta}")
            cache.clear()
            cache[key] = (-value, -grad)
        return cache[key]

    def record(theta):
        value = -objective(np.asarray(theta))[0]
        trace.objective.append(value)
        trace.params.append(np.array(theta))
        if callback is not None:
            callback(len(trace.objective) - 1, value)

    try:
        record(theta0)
        result = optimize.minimize(objective, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
                                   callback=record, options={"maxiter": max_iter, "ftol": tol})
        trace.message = str(result.message)
        best = trace.params[int(np.argmax(trace.objective))]
        if -result.fun >= max(trace.objective):
            best = result.x
    except _NonFiniteObjective as exc:
        logger.warning(f"Hyperparameter fit aborted on a non-finite objective: {exc}")
        trace.aborted = True
        trace.message = str(exc)
        best = trace.params[-1] if trace.params else theta0

    kernel, noise = _unpack(np.asarray(best), kernel_init)
    logger.info(f"Fitted lengthscales={kernel.lengthscales} output_scale_sq={kernel.output_scale_sq:.4g} "
                f"noise={noise.noise_variance:.4g} after {len(trace.objective) - 1} iterations")
    return kernel, noise, trace


def sgpr_optimal_q(Kuu: np.ndarray, Kuf: np.ndarray, y: np.ndarray, noise_variance: float,
                   jitter: Optional[float] = None) -> GaussianDist:
    """
    Optimal Gaussian q(u) of the collapsed bound.

    mean = 1/s^2 Kuu M^-1 Kuf y, cov = Kuu M^-1 Kuu, M = Kuu + 1/s^2 Kuf Kfu.
    With Kuu = L L^T and B = I + A A^T, A = L^-1 Kuf / s, this is
    cov = (L L_B^-T)(L L_B^-T)^T.

    Raises:
        NumericalError: If Kuu or B cannot be factorised
    """
    sigma = np.sqrt(noise_variance)
    L = jittered_cholesky(Kuu, jitter)
    A = solve_lower(L, Kuf) / sigma
    LB = jittered_cholesky(np.eye(A.shape[0]) + A @ A.T, 0.0)
    c = solve_lower(LB, A @ y) / sigma
    mean = L @ solve_upper(LB, c)
    factor = solve_lower(LB, L.T).T
    return GaussianDist.from_factor(mean, factor)


def collapsed_bound(Kuu: np.ndarray, Kuf: np.ndarray, kff_diag: np.ndarray, y: np.ndarray,
                    noise_variance: float, jitter: Optional[float] = None) -> float:
    """
    Collapsed variational bound
    log N(y; 0, s^2 I + Qff) - 1/(2 s^2) tr(Kff - Qff), Qff = Kfu Kuu^-1 Kuf.

    Raises:
        NumericalError: If the Nystrom residual trace is negative beyond 1e-8
    """
    n = y.shape[0]
    sigma = np.sqrt(noise_variance)
    L = jittered_cholesky(Kuu, jitter)
    A = solve_lower(L, Kuf) / sigma
    LB = jittered_cholesky(np.eye(A.shape[0]) + A @ A.T, 0.0)
    c = solve_lower(LB, A @ y) / sigma
    residual = float(np.sum(kff_diag)) - noise_variance * float(np.sum(A ** 2))
    if residual < -1e-8 * max(1.0, float(np.sum(np.abs(kff_diag)))):
        logger.error(f"Negative Nystrom residual trace {residual:.3e}")
        raise NumericalError(f"Nystrom residual trace is negative ({residual:.3e})")
    bound = -0.5 * n * (LOG_2PI + np.log(noise_variance))
    bound -= float(np.sum(np.log(np.diag(LB))))
    bound -= 0.5 * float(y @ y) / noise_variance
    bound += 0.5 * float(c @ c)
    bound -= 0.5 * max(residual, 0.0) / noise_variance
    return float(bound)


def svgp_predict(q: GaussianDist, Kuu: np.ndarray, K_star_u: np.ndarray, k_star,
                 noise_variance: Optional[float] = None, jitter: Optional[float] = None) -> Predictive:
    """
    Predictive of f* under q(u):
    mean = K*u Kuu^-1 m, cov = K** + K*u Kuu^-1 (S - Kuu) Kuu^-1 Ku*.

    Args:
        q: Variational distribution over u
        Kuu: (M, M) prior covariance of u
        K_star_u: (n, M) cross-covariance
        k_star: (n,) prior variances, or an (n, n) prior covariance for the full predictive
        noise_variance: If given, the result includes observation noise
        jitter: Extra diagonal on Kuu

    Returns:
        Predictive (latent unless noise_variance is given)
    """
    L = jittered_cholesky(Kuu, jitter)
    V = solve_lower(L, K_star_u.T)
    W = solve_upper(L, V)
    SW = q.cov_chol.T @ W
    mean = W.T @ q.mean
    k_star = np.asarray(k_star, dtype=float)
    full = k_star.ndim == 2
    prior_var = np.diag(k_star) if full else k_star
    variance = np.maximum(prior_var - np.sum(V ** 2, axis=0) + np.sum(SW ** 2, axis=0), 0.0)
    cov = symmetrize(k_star - V.T @ V + SW.T @ SW) if full else None
    pred = Predictive(mean, variance, False, cov)
    return pred.with_noise(noise_variance) if noise_variance is not None else pred


def gaussian_kl(q: GaussianDist, p: GaussianDist) -> float:
    """
    KL(q || p) = 1/2 [tr(Sp^-1 Sq) + (mp - mq)^T Sp^-1 (mp - mq) - k + log|Sp| - log|Sq|].

    Raises:
        InputError: On a dimension mismatch
    """
    if q.dim != p.dim:
        raise InputError(f"KL between dimensions {q.dim} and {p.dim}")
    trace_term = float(np.sum(solve_lower(p.cov_chol, q.cov_chol) ** 2))
    diff = solve_lower(p.cov_chol, p.mean - q.mean)
    logdet_p = chol_logdet(p.cov_chol)
    logdet_q = chol_logdet(q.cov_chol)
    return 0.5 * (trace_term + float(diff @ diff) - q.dim + logdet_p - logdet_q)


def expected_log_likelihood(pred: Predictive, y: np.ndarray, noise_variance: float) -> float:
    """sum_n E_q[log N(y_n; f_n, s^2)] for a latent Gaussian predictive."""
    resid = (y - pred.mean) ** 2 + pred.variance
    return float(-0.5 * y.shape[0] * (LOG_2PI + np.log(noise_variance)) - 0.5 * np.sum(resid) / noise_variance)


def elbo_gaussian(q: GaussianDist, Kuu: np.ndarray, Kuf: np.ndarray, kff_diag: np.ndarray,
                  y: np.ndarray, noise_variance: float, jitter: Optional[float] = None) -> float:
    """Uncollapsed ELBO: expected log likelihood minus KL(q || N(0, Kuu))."""
    L = jittered_cholesky(Kuu, jitter)
    prior = GaussianDist(np.zeros(Kuu.shape[0]), L)
    pred = svgp_predict(q, Kuu, Kuf.T, kff_diag, jitter=jitter)
    return expected_log_likelihood(pred, y, noise_variance) - gaussian_kl(q, prior)


def predictive_samples(pred: Predictive, n_samples: int, seed: int) -> np.ndarray:
    """
    Independent draws from each predictive marginal.

    Returns:
        (n_samples, n) array
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, pred.mean.shape[0]))
    return pred.mean[None, :] + np.sqrt(pred.variance)[None, :] * noise
