"""
Kernels Module for streamgp

This module defines the stationary covariance functions (ARD-RBF, Matern-5/2),
the Linear kernel used for weight-space cross-checks, kernel-matrix assembly,
hyperparameter gradients and spectral-frequency sampling for random Fourier
features.
High cohesion: Contains only kernel definitions and their spectral densities.
Low coupling: Depends only on constants, errors and logger.
"""

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Tuple

import numpy as np

from .constants import MATERN52_DOF, NOISE_FLOOR
from .errors import InputError, UnsupportedKernelError
from .logger import get_logger

logger = get_logger("kernels")

SQRT5 = np.sqrt(5.0)


class KernelVariant(Enum):
    """Supported covariance functions."""

    RBF = "rbf"
    MATERN52 = "matern52"
    LINEAR = "linear"

    @classmethod
    def parse(cls, name: str) -> "KernelVariant":
        """
        Look up a variant by its configuration name.

        Args:
            name: One of "rbf", "matern52", "linear"

        Returns:
            The matching variant

        Raises:
            InputError: If the name is unknown
        """
        aliases = {"ard-rbf": "rbf", "se": "rbf", "matern-5/2": "matern52", "matern": "matern52"}
        key = aliases.get(name.strip().lower(), name.strip().lower())
        for variant in cls:
            if variant.value == key:
                return variant
        raise InputError(f"Unknown kernel variant: {name!r}")


@dataclass(frozen=True)
class Kernel:
    """
    Covariance function with its hyperparameters.

    Attributes:
        variant: Covariance family
        output_scale_sq: Output variance sigma_f^2
        lengthscales: One lengthscale per input dimension
    """

    variant: KernelVariant
    output_scale_sq: float
    lengthscales: Tuple[float, ...]

    def __post_init__(self):
        lengthscales = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", lengthscales)
        object.__setattr__(self, "output_scale_sq", float(self.output_scale_sq))
        if not self.output_scale_sq > 0.0:
            logger.error(f"Invalid output scale: {self.output_scale_sq}")
            raise InputError("output_scale_sq must be positive")
        if len(lengthscales) == 0 or any(not v > 0.0 for v in lengthscales):
            logger.error(f"Invalid lengthscales: {lengthscales}")
            raise InputError("every lengthscale must be positive")

    @classmethod
    def rbf(cls, lengthscale=1.0, output_scale_sq: float = 1.0) -> "Kernel":
        """ARD-RBF kernel; pass a sequence for per-dimension lengthscales."""
        return cls(KernelVariant.RBF, output_scale_sq, tuple(np.atleast_1d(lengthscale)))

    @classmethod
    def matern52(cls, lengthscale=1.0, output_scale_sq: float = 1.0) -> "Kernel":
        """Matern-5/2 kernel with ARD lengthscales."""
        return cls(KernelVariant.MATERN52, output_scale_sq, tuple(np.atleast_1d(lengthscale)))

    @classmethod
    def linear(cls, input_dim: int = 1, output_scale_sq: float = 1.0) -> "Kernel":
        """Linear kernel sigma_f^2 x.x'; only for weight-space checks."""
        return cls(KernelVariant.LINEAR, output_scale_sq, (1.0,) * input_dim)

    @property
    def input_dim(self) -> int:
        return len(self.lengthscales)

    @property
    def is_stationary(self) -> bool:
        return self.variant is not KernelVariant.LINEAR

    def scaled(self, factor: float) -> "Kernel":
        """Copy with output_scale_sq multiplied by factor."""
        return replace(self, output_scale_sq=self.output_scale_sq * factor)

    def fingerprint(self) -> str:
        """Hash of the quantities that shape the spectral density."""
        text = f"{self.variant.value}:{','.join(repr(v) for v in self.lengthscales)}"
        return hashlib.sha1(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class NoiseModel:
    """
    Gaussian likelihood noise.

    Attributes:
        noise_variance: sigma^2, floored at NOISE_FLOOR
    """

    noise_variance: float

    def __post_init__(self):
        value = float(self.noise_variance)
        if not np.isfinite(value) or value < 0.0:
            logger.error(f"Invalid noise variance: {value}")
            raise InputError("noise_variance must be a non-negative finite number")
        object.__setattr__(self, "noise_variance", max(value, NOISE_FLOOR))


@dataclass(frozen=True, eq=False)
class FrequencyDraws:
    """
    Spectral frequencies shared by every random Fourier feature of a model.

    Attributes:
        frequencies: (N, input_dim) samples w_n ~ p(w)
        seed: Seed they were drawn with
        kernel_fingerprint: Fingerprint of the kernel they belong to
    """

    frequencies: np.ndarray
    seed: int
    kernel_fingerprint: str = field(default="")

    @property
    def n_samples(self) -> int:
        return int(self.frequencies.shape[0])


def as_points(X, input_dim: int) -> np.ndarray:
    """
    Coerce inputs to an (n, input_dim) float array.

    A 1-D array is read as n scalar points when input_dim is 1, and as a
    single point otherwise.

    Raises:
        InputError: On a dimension mismatch or non-finite entries
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1) if input_dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise InputError(f"expected points of dimension {input_dim}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("inputs contain non-finite values")
    return X


def _scaled_sq_dist(kernel: Kernel, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    ls = np.asarray(kernel.lengthscales)
    A = X / ls
    B = X2 / ls
    sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :] - 2.0 * A @ B.T)
    return np.maximum(sq, 0.0)


def kernel_matrix(kernel: Kernel, X, X2=None) -> np.ndarray:
    """
    Kernel matrix [k(X_i, X2_j)]_{ij}.

    Args:
        kernel: Covariance function
        X: (n, d) points
        X2: (m, d) points (default: X)

    Returns:
        (n, m) matrix; symmetric when X2 is omitted
    """
    X = as_points(X, kernel.input_dim)
    X2 = X if X2 is None else as_points(X2, kernel.input_dim)
    if kernel.variant is KernelVariant.LINEAR:
        return kernel.output_scale_sq * (X @ X2.T)
    sq = _scaled_sq_dist(kernel, X, X2)
    if kernel.variant is KernelVariant.RBF:
        return kernel.output_scale_sq * np.exp(-0.5 * sq)
    r = np.sqrt(sq)
    return kernel.output_scale_sq * (1.0 + SQRT5 * r + (5.0 / 3.0) * sq) * np.exp(-SQRT5 * r)


def kernel_diag(kernel: Kernel, X) -> np.ndarray:
    """Diagonal k(X_i, X_i) without forming the full matrix."""
    X = as_points(X, kernel.input_dim)
    if kernel.variant is KernelVariant.LINEAR:
        return kernel.output_scale_sq * np.sum(X ** 2, axis=1)
    return np.full(X.shape[0], kernel.output_scale_sq)


def kernel_eval(kernel: Kernel, x, x2) -> float:
    """
    Evaluate k(x, x2) for two single points.

    Raises:
        InputError: If either point does not have input_dim entries
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != (kernel.input_dim,) or x2.shape != (kernel.input_dim,):
        logger.error(f"Dimension mismatch: {x.shape} vs {x2.shape} for input_dim {kernel.input_dim}")
        raise InputError(f"points must have {kernel.input_dim} entries")
    return float(kernel_matrix(kernel, x[None, :], x2[None, :])[0, 0])


def kernel_gradients(kernel: Kernel, X) -> List[np.ndarray]:
    """
    Derivatives of K(X, X) w.r.t. log-lengthscales and log output scale.

    Args:
        kernel: Stationary kernel
        X: (n, d) points

    Returns:
        List of (n, n) matrices: one per lengthscale, then d/dlog sigma_f^2

    Raises:
        UnsupportedKernelError: For the Linear kernel
    """
    if not kernel.is_stationary:
        raise UnsupportedKernelError("gradients are only defined for stationary kernels")
    X = as_points(X, kernel.input_dim)
    K = kernel_matrix(kernel, X)
    grads = []
    if kernel.variant is KernelVariant.RBF:
        for j, ls in enumerate(kernel.lengthscales):
            diff = (X[:, j][:, None] - X[:, j][None, :]) ** 2
            grads.append(K * diff / ls ** 2)
    else:
        r = np.sqrt(_scaled_sq_dist(kernel, X, X))
        # dk/dr * dr/dlog(l_j) simplifies, so r = 0 needs no special case
        envelope = kernel.output_scale_sq * (5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
        for j, ls in enumerate(kernel.lengthscales):
            diff = (X[:, j][:, None] - X[:, j][None, :]) ** 2
            grads.append(envelope * diff / ls ** 2)
    grads.append(K.copy())
    return grads


def sample_frequencies(kernel: Kernel, n: int, seed: int) -> FrequencyDraws:
    """
    Draw n frequencies from the kernel's spectral density.

    ARD-RBF: w ~ N(0, diag(1 / l^2)).
    Matern-5/2: multivariate Student-t with 5 degrees of freedom,
    w = g * sqrt(5 / u), g ~ N(0, diag(1 / l^2)), u ~ chi^2(5).

    Args:
        kernel: Stationary kernel
        n: Number of samples (>= 1)
        seed: Seed for numpy's default generator

    Returns:
        FrequencyDraws with an (n, input_dim) frequency matrix

    Raises:
        UnsupportedKernelError: For the Linear kernel
        InputError: If n < 1
    """
    if not kernel.is_stationary:
        logger.error("Frequency sampling requested for a non-stationary kernel")
        raise UnsupportedKernelError("the Linear kernel has no spectral density")
    if n < 1:
        raise InputError("at least one frequency sample is required")

    rng = np.random.default_rng(seed)
    scale = 1.0 / np.asarray(kernel.lengthscales)
    w = rng.standard_normal((n, kernel.input_dim)) * scale
    if kernel.variant is KernelVariant.MATERN52:
        u = rng.chisquare(MATERN52_DOF, size=(n, 1))
        w = w * np.sqrt(MATERN52_DOF / u)
    return FrequencyDraws(w, int(seed), kernel.fingerprint())


def rff_kernel_estimate(kernel: Kernel, draws: FrequencyDraws, X, X2=None) -> np.ndarray:
    """
    Random Fourier feature estimate of the kernel matrix,
    sigma_f^2 * mean_n [cos(w_n.x) cos(w_n.x') + sin(w_n.x) sin(w_n.x')].
    """
    X = as_points(X, kernel.input_dim)
    X2 = X if X2 is None else as_points(X2, kernel.input_dim)
    P = X @ draws.frequencies.T
    P2 = X2 @ draws.frequencies.T
    gram = np.cos(P) @ np.cos(P2).T + np.sin(P) @ np.sin(P2).T
    return kernel.output_scale_sq * gram / draws.n_samples
