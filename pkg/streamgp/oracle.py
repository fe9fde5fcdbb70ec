"""
Oracle Module for streamgp

Self-checks that compare the recurrences against independent references:
coefficients and K_fu rows against Gauss-Legendre quadrature, the random
Fourier feature K_uu against nested quadrature, and streaming SGPR against
batch SGPR. The direct K_uu ODE is compared with the feature path and
recorded without affecting the verdict.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from .config import ExperimentConfig
from .data import generate_synthetic
from .gp import sgpr_optimal_q, svgp_predict
from .hippo import BasisFamily, HippoOperator, Scheme, project_signal, quadrature_coefficients
from .interdomain import (advance_features, assemble_kuu, backfill_kfu, direct_kuu, initial_features,
                          quadrature_kfu, quadrature_kuu)
from .kernels import Kernel, KernelVariant, NoiseModel, kernel_diag, kernel_matrix, sample_frequencies
from .logger import get_logger
from .online import Method, OnlineSettings, init_state, online_update, predict, resample_inducing, split_stream

logger = get_logger("oracle")

ORACLE_TIME = 1.0
ORACLE_ORDER = 6
COARSE_DT = 1e-2
STREAMING_LENGTHSCALE = 0.05
STREAMING_INDUCING = 10


@dataclass(frozen=True)
class OracleRow:
    """
    One check.

    Attributes:
        name: Check identifier
        error: Measured discrepancy
        threshold: Pass threshold (inf for recorded-only rows)
        passed: Whether error <= threshold
        recorded: True for informational rows that never fail the run
    """

    name: str
    error: float
    threshold: float
    passed: bool
    recorded: bool = False


def _row(name: str, error: float, threshold: float, recorded: bool = False) -> OracleRow:
    passed = bool(np.isfinite(error) and error <= threshold)
    logger.info(f"{name}: error {error:.3e} (threshold {threshold:.1e}) {'ok' if passed else 'FAIL'}")
    return OracleRow(name, float(error), float(threshold), passed or recorded, recorded)


def _oracle_signal(x: np.ndarray) -> np.ndarray:
    return np.sin(2.0 * np.pi * x) + 0.5 * x


def check_coefficients(op: HippoOperator, dt: float, scheme: Scheme, tol: float) -> OracleRow:
    state = project_signal(_oracle_signal, op, ORACLE_TIME, dt, scheme)
    reference = quadrature_coefficients(_oracle_signal, op, ORACLE_TIME)
    return _row(f"coefficients-{scheme.value}", float(np.max(np.abs(state.coeffs - reference))), tol)


def check_kfu(op: HippoOperator, kernel: Kernel, dt: float, scheme: Scheme, tol: float) -> OracleRow:
    rows = backfill_kfu(np.array([[0.5]]), op, kernel, ORACLE_TIME, dt, scheme).rows[0]
    reference = quadrature_kfu(kernel, 0.5, op, ORACLE_TIME)
    return _row("kfu-rows", float(np.max(np.abs(rows - reference))), tol)


def check_kuu(op: HippoOperator, kernel: Kernel, dt: float, scheme: Scheme, n_samples: int, seed: int,
              tol: float) -> OracleRow:
    fs = initial_features(op, sample_frequencies(kernel, n_samples, seed))
    fs = advance_features(fs, op, dt, scheme, n_steps=int(round(ORACLE_TIME / dt)))
    estimate = assemble_kuu(fs, kernel)
    reference = quadrature_kuu(kernel, op, ORACLE_TIME)
    return _row("rff-kuu", float(np.linalg.norm(estimate - reference) / np.linalg.norm(reference)), tol)


def check_streaming(config: ExperimentConfig, kernel: Kernel, tol: float) -> OracleRow:
    """osgpr-fixedz over four tasks against batch SGPR on the union."""
    kernel = Kernel(kernel.variant, kernel.output_scale_sq, (STREAMING_LENGTHSCALE,))
    data = generate_synthetic("sine-drift", 200, 0.1, config.seed)
    stream = split_stream(data, 4)
    noise = NoiseModel(0.01)
    settings = OnlineSettings(method=Method.OSGPR_FIXEDZ, num_inducing=STREAMING_INDUCING, seed=config.seed,
                              fit_first_task=False, jitter=config.jitter)
    state = init_state(settings, kernel, noise)
    for task in stream.tasks:
        state = online_update(state, task)
    X_test = np.linspace(0.0, 1.0, 50)[:, None]
    online = predict(state, X_test)
    Z = resample_inducing(None, stream.tasks[0].X, STREAMING_INDUCING, config.seed)
    Kuu = kernel_matrix(kernel, Z)
    q = sgpr_optimal_q(Kuu, kernel_matrix(kernel, Z, data.X), data.y, noise.noise_variance, config.jitter)
    batch = svgp_predict(q, Kuu, kernel_matrix(kernel, X_test, Z), kernel_diag(kernel, X_test),
                         noise.noise_variance, config.jitter)
    error = max(np.max(np.abs(online.mean - batch.mean)), np.max(np.abs(online.variance - batch.variance)))
    return _row("streaming-exactness", float(error), tol)


def compare_direct_ode(kernel: Kernel, n_samples: int, seed: int) -> List[OracleRow]:
    """Direct K_uu ODE and the feature path against quadrature at a coarse step; informational only."""
    op = HippoOperator(BasisFamily.LEGS, 8)
    reference = quadrature_kuu(kernel, op, ORACLE_TIME)
    scale = np.linalg.norm(reference)
    direct = direct_kuu(op, kernel, ORACLE_TIME, COARSE_DT)
    fs = initial_features(op, sample_frequencies(kernel, n_samples, seed))
    fs = advance_features(fs, op, COARSE_DT, Scheme.EULER, n_steps=int(round(ORACLE_TIME / COARSE_DT)))
    return [
        _row("direct-ode-kuu (recorded)", float(np.linalg.norm(direct - reference) / scale), 0.1, recorded=True),
        _row("rff-kuu-coarse (recorded)", float(np.linalg.norm(assemble_kuu(fs, kernel) - reference) / scale), 0.1,
             recorded=True),
    ]


def oracle_check(config: ExperimentConfig) -> List[OracleRow]:
    """
    Run every check for the configured basis family and step size.

    The step defaults to 1e-3; the kernel is the configured variant with the
    configured lengthscale.

    Returns:
        Rows in run order; the run passes when every row passed
    """
    dt = config.dt if config.dt is not None else 1e-3
    op = HippoOperator(BasisFamily.parse(config.basis), ORACLE_ORDER, config.theta)
    variant = KernelVariant.parse(config.kernel)
    kernel = Kernel(variant, config.output_scale ** 2, (config.lengthscale,))
    rows = [
        check_coefficients(op, dt, Scheme.EULER, config.tol_coefficients),
        check_coefficients(op, dt, Scheme.BILINEAR, config.tol_coefficients * 1e-2),
        check_kfu(op, kernel, dt, Scheme.parse(config.scheme), config.tol_kfu),
        check_kuu(op, Kernel(variant, kernel.output_scale_sq, (0.5,)), dt, Scheme.parse(config.scheme),
                  config.rff_samples, config.seed, config.tol_kuu),
        check_streaming(config, kernel, config.tol_streaming),
    ]
    if op.family is BasisFamily.LEGS:
        rows.extend(compare_direct_ode(kernel, config.rff_samples, config.seed))
    return rows


def format_table(rows: List[OracleRow]) -> str:
    """Plain-text pass/fail table."""
    width = max(len(r.name) for r in rows)
    lines = [f"{'check'.ljust(width)}  {'error':>10}  {'threshold':>10}  result"]
    for r in rows:
        verdict = "recorded" if r.recorded else ("pass" if r.passed else "FAIL")
        lines.append(f"{r.name.ljust(width)}  {r.error:10.3e}  {r.threshold:10.1e}  {verdict}")
    return "\n".join(lines)
