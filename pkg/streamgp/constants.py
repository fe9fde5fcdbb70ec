"""
Constants Module for streamgp

This module holds the numerical defaults shared by every other module:
jitter policy, default step counts, Monte-Carlo sizes and fixed grids.
High cohesion: Contains only constant data, no logic.
Low coupling: No dependencies on other streamgp modules.
"""

# Jitter added to square kernel matrices, relative to the output scale.
DEFAULT_JITTER = 1e-8

# Jitter escalation: each retry multiplies the jitter by JITTER_GROWTH.
JITTER_RETRIES = 3
JITTER_GROWTH = 10.0

# Smallest admissible noise variance.
NOISE_FLOOR = 1e-10

# Noise floor used while fitting, relative to var(y).
FIT_NOISE_FLOOR = 1e-6

# Random Fourier feature count used by the streaming experiments.
DEFAULT_RFF_SAMPLES = 1000

# Streaming protocol defaults.
DEFAULT_N_TASKS = 10
DEFAULT_STEPS_PER_TASK = 1000
DEFAULT_NUM_INDUCING = 50

# Every EVAL_STRIDE-th point of a task is held out for evaluation.
EVAL_STRIDE = 5

# Gauss-Legendre node count for the quadrature oracles.
DEFAULT_QUADRATURE_NODES = 128

# Central-interval levels for the expected calibration error.
ECE_LEVELS = (0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95)
DEFAULT_ECE_SAMPLES = 100

# Student-t degrees of freedom behind the Matern-5/2 spectral density.
MATERN52_DOF = 5.0

# Tolerance for "end time is a multiple of the step".
GRID_RTOL = 1e-9

CSV_HEADER = ("task_learned", "task_eval", "rmse", "nlpd", "wall_ms")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
