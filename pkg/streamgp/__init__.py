"""
streamgp - Online sparse Gaussian-process regression with HiPPO inducing variables.

Inducing variables are projections of the GP onto time-varying orthogonal
bases and are carried forward from task to task by linear recurrences, so the
streaming update needs no inducing-location optimization. Exact GP, SGPR and
streaming baselines plus quadrature self-checks are included.

Set STREAMGP_THREADS to cap the BLAS thread pools; it must be set before the
package is first imported.
"""

import os

_threads = os.environ.get("STREAMGP_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .config import ExperimentConfig, load_config, parse_config
from .data import generate_synthetic, load_csv, write_csv
from .errors import (ConfigError, DataError, InputError, NumericalError, StateError, StreamGPError,
                     UnsupportedFamilyError, UnsupportedKernelError)
from .experiment import run_experiment
from .gp import (DataBatch, GaussianDist, Predictive, collapsed_bound, elbo_gaussian, fit_hyperparameters,
                 gp_predict, log_marginal_likelihood, sgpr_optimal_q, svgp_predict)
from .hippo import BasisFamily, HippoOperator, Scheme, project_signal, reconstruct
from .kernels import Kernel, KernelVariant, NoiseModel
from .logger import get_logger, setup_logger
from .metrics import MetricsReport, ece, nlpd, rmse
from .online import (KfuSource, Method, OnlineSettings, init_state, online_update, predict, reconstruct_posterior,
                     split_stream, track_inputs)
from .oracle import oracle_check

__version__ = "0.1.0"
__all__ = [
    "BasisFamily", "ConfigError", "DataBatch", "DataError", "ExperimentConfig", "GaussianDist",
    "HippoOperator", "InputError", "Kernel", "KernelVariant", "KfuSource", "Method", "MetricsReport", "NoiseModel",
    "NumericalError", "OnlineSettings", "Predictive", "Scheme", "StateError", "StreamGPError",
    "UnsupportedFamilyError", "UnsupportedKernelError", "collapsed_bound", "ece", "elbo_gaussian",
    "fit_hyperparameters", "generate_synthetic", "get_logger", "gp_predict", "init_state", "load_config",
    "load_csv", "log_marginal_likelihood", "nlpd", "online_update", "oracle_check", "parse_config",
    "predict", "project_signal", "reconstruct", "reconstruct_posterior", "rmse", "run_experiment",
    "setup_logger", "sgpr_optimal_q", "split_stream", "svgp_predict", "track_inputs", "write_csv",
]
