"""
Experiment Module for streamgp

Runs one streaming benchmark: load or synthesise the data, split it into
sequential tasks with a held-out test split per task, learn the tasks one at a
time and, after each, evaluate RMSE and NLPD on the test split of every task
learned so far.

Besides the online methods, two references are available: `exact-gp` (exact GP
on the union of learned tasks) and `sgpr-batch` (batch SGPR on that union with
the inducing points `osgpr-fixedz` would use).
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .config import ExperimentConfig
from .constants import DEFAULT_STEPS_PER_TASK
from .data import eval_split, generate_synthetic, load_csv
from .errors import InputError, NumericalError
from .gp import (DataBatch, Predictive, fit_hyperparameters, gp_predict, predictive_samples, sgpr_optimal_q,
                 svgp_predict)
from .hippo import BasisFamily, Scheme
from .kernels import Kernel, KernelVariant, NoiseModel, kernel_diag, kernel_matrix
from .logger import get_logger, timed
from .metrics import MetricsReport, MetricsRow, ece, nlpd, rmse
from .multidim import OrderingStrategy
from .online import (InputMode, KfuSource, Method, OnlineSettings, init_state, online_update, predict,
                     resample_inducing, split_stream, track_inputs)

logger = get_logger("experiment")


@dataclass(frozen=True, eq=False)
class PreparedRun:
    """Tasks split into train/test parts plus the initial hyperparameters."""

    train: Tuple[DataBatch, ...]
    test: Tuple[DataBatch, ...]
    boundaries: Tuple[float, ...]
    kernel: Kernel
    noise: NoiseModel
    dt: float


def load_dataset(config: ExperimentConfig) -> DataBatch:
    """The configured CSV file, or `synth:<kind>` data."""
    if not config.dataset:
        raise InputError("no dataset configured")
    if config.dataset.startswith("synth:"):
        kind = config.dataset[len("synth:"):]
        data = generate_synthetic(kind, config.synth_n, config.synth_noise, config.seed)
        if kind == "two-cluster-2d" and config.mode != "multidim":
            raise InputError("two-cluster-2d data needs mode = multidim")
        return data
    return load_csv(config.dataset, config.mode)


def prepare(config: ExperimentConfig, data: DataBatch) -> PreparedRun:
    """Split into tasks and derive the kernel, noise and default step size."""
    stream = split_stream(data, config.n_tasks)
    parts = [eval_split(task) for task in stream.tasks]
    train = tuple(p[0] for p in parts)
    test = tuple(p[1] for p in parts)
    if any(t.size == 0 for t in train):
        raise InputError("every task needs at least one training point")
    kernel = Kernel(KernelVariant.parse(config.kernel), config.output_scale ** 2,
                    (config.lengthscale,) * data.input_dim)
    noise = NoiseModel(config.noise)
    dt = config.dt
    if dt is None:
        if config.mode == "timeseries":
            t_max = float(np.max(data.timestamps if data.timestamps is not None else data.X[:, 0]))
            dt = (t_max / config.n_tasks) / DEFAULT_STEPS_PER_TASK
        else:
            dt = 1.0 / sum(t.size for t in train)
    return PreparedRun(train, test, stream.boundaries, kernel, noise, dt)


def settings_for(config: ExperimentConfig, dt: float) -> OnlineSettings:
    """Online model settings from a config."""
    method = Method.parse(config.method)
    ordering = config.ordering
    if ordering.replace("-", "_") == "by_dimension":
        ordering = f"by_dimension:{config.ordering_dim}"
    return OnlineSettings(
        method=method,
        num_inducing=config.num_inducing,
        family=BasisFamily.parse(config.basis),
        theta=config.theta,
        dt=dt,
        scheme=Scheme.parse(config.scheme),
        rff_samples=config.rff_samples,
        mode=InputMode(config.mode),
        ordering=OrderingStrategy.parse(ordering, config.seed),
        stride=config.stride,
        seed=config.seed,
        fit_first_task=config.fit_hyperparameters,
        jitter=config.jitter,
        kfu_source=KfuSource.parse(config.kfu_source),
    )


def _evaluate(report: MetricsReport, config: ExperimentConfig, learned: int, preds: List[Predictive],
              tests: Tuple[DataBatch, ...], wall_ms: int) -> None:
    for j, (pred, test) in enumerate(zip(preds, tests), start=1):
        if test.size == 0:
            continue
        score_ece = None
        if config.ece_samples >= 2:
            samples = predictive_samples(pred, config.ece_samples, config.seed + 1000 * learned + j)
            score_ece = ece(samples, test.y)
        report.add(MetricsRow(learned, j, rmse(test.y, pred.mean), nlpd(pred, test.y),
                              wall_ms if config.wall_time else 0, score_ece))
        logger.debug(f"Learned {learned}, eval {j}: rmse={report.rows[-1].rmse:.4f} nlpd={report.rows[-1].nlpd:.4f}")


def _split_predictive(pred: Predictive, sizes: List[int]) -> List[Predictive]:
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return [Predictive(pred.mean[a:b], pred.variance[a:b], pred.includes_noise)
            for a, b in zip(edges[:-1], edges[1:])]


def _run_online(config: ExperimentConfig, run: PreparedRun, report: MetricsReport) -> None:
    settings = settings_for(config, run.dt)
    state = init_state(settings, run.kernel, run.noise)
    all_test = np.vstack([t.X for t in run.test])
    sizes = [t.size for t in run.test]
    state = track_inputs(state, all_test)
    for i, task in enumerate(run.train):
        boundary = run.boundaries[i] if settings.mode is InputMode.TIMESERIES else None
        with timed(logger, f"Learning task {i + 1}") as wall:
            state = online_update(state, task, boundary)
        preds = _split_predictive(predict(state, all_test), sizes)
        _evaluate(report, config, i + 1, preds[:i + 1], run.test[:i + 1], wall[0])


def _fit_reference(config: ExperimentConfig, run: PreparedRun) -> Tuple[Kernel, NoiseModel]:
    if config.fit_hyperparameters and run.train[0].size >= 2:
        kernel, noise, _ = fit_hyperparameters(run.kernel, run.noise, run.train[0])
        return kernel, noise
    return run.kernel, run.noise


def _run_reference(config: ExperimentConfig, run: PreparedRun, report: MetricsReport) -> None:
    kernel, noise = _fit_reference(config, run)
    Z = None
    if config.method == "sgpr-batch":
        Z = resample_inducing(None, run.train[0].X, config.num_inducing, config.seed)
    for i in range(len(run.train)):
        union = DataBatch.concat(list(run.train[:i + 1]))
        preds = []
        with timed(logger, f"Reference fit on {i + 1} tasks") as wall:
            if Z is not None:
                Kuu = kernel_matrix(kernel, Z)
                q = sgpr_optimal_q(Kuu, kernel_matrix(kernel, Z, union.X), union.y, noise.noise_variance,
                                   config.jitter)
        for test in run.test[:i + 1]:
            if Z is None:
                preds.append(gp_predict(kernel, noise, union, test.X, include_noise=True))
            else:
                preds.append(svgp_predict(q, Kuu, kernel_matrix(kernel, test.X, Z), kernel_diag(kernel, test.X),
                                          noise.noise_variance, config.jitter))
        _evaluate(report, config, i + 1, preds, run.test[:i + 1], wall[0])


def write_report(report: MetricsReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        report.write_csv(handle)
    logger.info(f"Wrote {len(report.rows)} rows to {path}")


def run_experiment(config: ExperimentConfig, data: Optional[DataBatch] = None) -> MetricsReport:
    """
    Run a benchmark and write its CSV to config.output when set.

    Args:
        config: Validated experiment configuration
        data: Pre-loaded data (default: load config.dataset)

    Returns:
        MetricsReport with one row per (task learned, task evaluated)

    Raises:
        NumericalError: After writing the rows completed so far
    """
    data = load_dataset(config) if data is None else data
    run = prepare(config, data)
    logger.info(f"Running {config.method} on {data.size} points in {len(run.train)} tasks (dt={run.dt:.3g})")
    report = MetricsReport()
    try:
        if config.method in ("exact-gp", "sgpr-batch"):
            _run_reference(config, run, report)
        else:
            _run_online(config, run, report)
    except NumericalError:
        if config.output:
            write_report(report, config.output)
        raise
    if config.output:
        write_report(report, config.output)
    return report
