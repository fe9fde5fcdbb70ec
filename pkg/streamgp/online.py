"""
Online Module for streamgp

This module runs the streaming-task protocol. A model state holds a Gaussian
q(u) over the current inducing variables; every task moves the inducing
structure forward (HiPPO covariances evolved to the new boundary, or a new set
of inducing locations for the baselines) and then replaces q by the closed-form
maximiser of the online ELBO.

For Gaussian likelihoods that maximiser is

    Q    = K_bb + K_bf K_fb / s^2 + K_ba (S_a^-1 - K_aa^-1) K_ab
    S_b  = K_bb Q^-1 K_bb
    m_b  = K_bb Q^-1 (K_bf y / s^2 + K_ba S_a^-1 m_a)

where a are the previous inducing variables (q_old = N(m_a, S_a), prior
K_aa) and b the new ones. The old posterior acts as a Gaussian
pseudo-likelihood on u_a, corrected by the old prior. Q is never formed as
written: it is solved in coordinates whitened by the Cholesky factors of K_aa
and K_bb, where the old-prior correction becomes I - Psi^T Psi with
Psi = L_a^-1 K_ab L_b^-T.

For ohsgpr the K_fu block comes from the same random features as K_uu by
default (KfuSource.FEATURES), so the joint prior of (f, u) stays positive
semi-definite.

Methods:
    ohsgpr            HiPPO inducing variables (any basis family)
    osgpr-fixedz      inducing points sampled from task 1, then fixed
    osgpr-resamplez   inducing points resampled from old Z and new inputs each task
    ovc-pivchol       pivoted-Cholesky selection from old Z and new inputs each task
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .constants import DEFAULT_NUM_INDUCING, DEFAULT_RFF_SAMPLES, GRID_RTOL
from .errors import InputError, NumericalError, StateError
from .gp import (DataBatch, GaussianDist, Predictive, elbo_gaussian, expected_log_likelihood,
                 fit_hyperparameters, gaussian_kl, sgpr_optimal_q, svgp_predict)
from .hippo import BasisFamily, HippoOperator, Scheme, basis_matrix, grid_steps, reconstruction_weights
from .interdomain import (FeatureState, KfuRows, advance_features, advance_kfu, assemble_kuu, backfill_kfu,
                          checkpoint_features, cross_kuu, empty_kfu, feature_kfu, initial_features)
from .kernels import Kernel, NoiseModel, as_points, kernel_diag, kernel_matrix, sample_frequencies
from .linalg import chol_logdet, default_jitter, jittered_cholesky, solve_lower, solve_upper, symmetrize
from .logger import get_logger, timed
from .multidim import OrderingKind, OrderingStrategy, order_points, strided_sources

logger = get_logger("online")


class Method(Enum):
    OHSGPR = "ohsgpr"
    OSGPR_FIXEDZ = "osgpr-fixedz"
    OSGPR_RESAMPLEZ = "osgpr-resamplez"
    OVC_PIVCHOL = "ovc-pivchol"

    @classmethod
    def parse(cls, name: str) -> "Method":
        key = name.strip().lower().replace("_", "-")
        for method in cls:
            if method.value == key:
                return method
        raise InputError(f"Unknown online method: {name!r}")

    @property
    def uses_hippo(self) -> bool:
        return self is Method.OHSGPR


class InputMode(Enum):
    TIMESERIES = "timeseries"
    MULTIDIM = "multidim"


class KfuSource(Enum):
    """
    Where ohsgpr takes Cov(f(x), u) from.

    FEATURES contracts the random features already used for K_uu, so every
    covariance block comes from one prior. RECURRENCE integrates the exact
    kernel along the source path; it is accurate per entry but not consistent
    with the feature K_uu.
    """

    FEATURES = "features"
    RECURRENCE = "recurrence"

    @classmethod
    def parse(cls, name) -> "KfuSource":
        if isinstance(name, KfuSource):
            return name
        key = name.strip().lower()
        for source in cls:
            if source.value == key:
                return source
        raise InputError(f"Unknown K_fu source: {name!r}")


@dataclass(frozen=True, eq=False)
class TaskStream:
    """
    Sequential tasks.

    Attributes:
        tasks: DataBatch per task, in arrival order
        boundaries: Last timestamp of each task (cumulative point count without timestamps)
    """

    tasks: Tuple[DataBatch, ...]
    boundaries: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.tasks)


@dataclass(frozen=True)
class OnlineSettings:
    """
    Static configuration of an online model.

    Attributes:
        method: Inducing-variable method
        num_inducing: M (basis order for ohsgpr)
        family: HiPPO family for ohsgpr
        theta: Window / timescale for LegT, LagT and FouT
        dt: Recurrence step (pseudo-time step in multidim mode)
        scheme: Discretization of the recurrences
        rff_samples: Random Fourier feature count N
        mode: timeseries or multidim
        ordering: Pseudo-time ordering for multidim mode
        stride: Source stride along the ordered path
        seed: Seed for frequencies, resampling and random ordering
        fit_first_task: Fit hyperparameters on task 1 before freezing them
        jitter: Nugget on the inducing variables (None: relative default); inducing
            variables at the same location or time share it
        kfu_source: How ohsgpr builds Cov(f, u)
    """

    method: Method = Method.OHSGPR
    num_inducing: int = DEFAULT_NUM_INDUCING
    family: BasisFamily = BasisFamily.LEGS
    theta: float = 1.0
    dt: Optional[float] = None
    scheme: Scheme = Scheme.EULER
    rff_samples: int = DEFAULT_RFF_SAMPLES
    mode: InputMode = InputMode.TIMESERIES
    ordering: OrderingStrategy = OrderingStrategy(OrderingKind.K_MAX)
    stride: int = 1
    seed: int = 0
    fit_first_task: bool = True
    jitter: Optional[float] = None
    kfu_source: KfuSource = KfuSource.FEATURES

    def __post_init__(self):
        if self.num_inducing < 1 or self.rff_samples < 1 or self.stride < 1:
            raise InputError("num_inducing, rff_samples and stride must be positive")
        if self.dt is not None and not self.dt > 0.0:
            raise InputError("dt must be positive")

    @property
    def operator(self) -> HippoOperator:
        return HippoOperator(self.family, self.num_inducing, self.theta)

    @property
    def step(self) -> float:
        """Recurrence step including the stride."""
        if self.dt is None:
            raise StateError("ohsgpr needs a step size dt")
        return self.stride * self.dt


@dataclass(frozen=True)
class TaskRecord:
    """
    Attributes:
        index: 1-based task number
        end_time: Boundary the model was evolved to
        n_points: Task size
        elbo: Online ELBO of the new q
        carried_elbo: Online ELBO of the previous q carried to the new inducing
            variables without the task (the prior for task 1)
        wall_ms: Update time
    """

    index: int
    end_time: float
    n_points: int
    elbo: float
    carried_elbo: float
    wall_ms: int


@dataclass(frozen=True, eq=False)
class OnlineModelState:
    """
    Online sparse GP after some number of tasks.

    Attributes:
        settings: Static configuration
        kernel: Covariance function (frozen after task 1)
        noise: Likelihood noise (frozen after task 1)
        q: q(u) over the current inducing variables (None before task 1)
        prior_kuu: Prior covariance of the current inducing variables
        task_index: Number of tasks learned
        frozen: Whether hyperparameters are fixed
        inducing: Inducing locations Z (baselines)
        features: Random Fourier feature state (ohsgpr)
        path: Source points seen so far (ohsgpr, multidim mode)
        tracked: K_fu rows of registered prediction inputs (ohsgpr)
        last_timestamp: Largest timestamp seen (timeseries mode)
        last_anchor: Last ordered point (multidim mode)
        history: One record per learned task
    """

    settings: OnlineSettings
    kernel: Kernel
    noise: NoiseModel
    q: Optional[GaussianDist] = None
    prior_kuu: Optional[np.ndarray] = None
    task_index: int = 0
    frozen: bool = False
    inducing: Optional[np.ndarray] = None
    features: Optional[FeatureState] = None
    path: Optional[np.ndarray] = None
    tracked: Optional[KfuRows] = None
    last_timestamp: float = 0.0
    last_anchor: Optional[np.ndarray] = None
    history: Tuple[TaskRecord, ...] = field(default=())

    @property
    def end_time(self) -> float:
        return 0.0 if self.features is None else self.features.end_time

    @property
    def num_inducing(self) -> int:
        if self.settings.method.uses_hippo:
            return self.settings.operator.state_dim
        return self.settings.num_inducing


def init_state(settings: OnlineSettings, kernel: Kernel, noise: NoiseModel) -> OnlineModelState:
    """Fresh model before any task."""
    if settings.mode is InputMode.TIMESERIES and kernel.input_dim != 1:
        raise InputError("timeseries mode needs a one-dimensional kernel")
    if settings.method.uses_hippo and settings.dt is None:
        raise InputError("ohsgpr needs a step size dt")
    return OnlineModelState(settings, kernel, noise, frozen=not settings.fit_first_task)


def split_stream(data: DataBatch, n_tasks: int) -> TaskStream:
    """
    Split data into n_tasks contiguous partitions of equal size; the remainder
    goes one extra point each to the last tasks.

    Raises:
        InputError: If n_tasks <= 0 or exceeds the number of points
    """
    if n_tasks <= 0:
        raise InputError("n_tasks must be positive")
    if data.size < n_tasks:
        raise InputError(f"{data.size} points cannot fill {n_tasks} tasks")
    if data.timestamps is not None:
        data = data.subset(np.argsort(data.timestamps, kind="stable"))
    base, extra = divmod(data.size, n_tasks)
    sizes = [base + (1 if i >= n_tasks - extra else 0) for i in range(n_tasks)]
    edges = np.concatenate([[0], np.cumsum(sizes)])
    tasks = tuple(data.subset(slice(edges[i], edges[i + 1])) for i in range(n_tasks))
    if data.timestamps is not None:
        boundaries = tuple(float(task.timestamps[-1]) for task in tasks)
    else:
        boundaries = tuple(float(e) for e in edges[1:])
    return TaskStream(tasks, boundaries)


def resample_inducing(old_Z: Optional[np.ndarray], new_X: np.ndarray, M: int, seed: int) -> np.ndarray:
    """
    Uniform sample of M points without replacement from old_Z and new_X.

    Raises:
        InputError: If fewer than M candidates are available
    """
    new_X = np.atleast_2d(np.asarray(new_X, dtype=float))
    candidates = new_X if old_Z is None or len(old_Z) == 0 else np.vstack([old_Z, new_X])
    if candidates.shape[0] < M:
        logger.error(f"Only {candidates.shape[0]} candidates for {M} inducing points")
        raise InputError(f"need at least {M} candidate inducing points, got {candidates.shape[0]}")
    index = np.random.default_rng(seed).choice(candidates.shape[0], size=M, replace=False)
    return candidates[index]


def pivoted_cholesky_select(kernel: Kernel, candidates, M: int) -> Tuple[np.ndarray, List[float]]:
    """
    Greedy pivoted Cholesky: repeatedly pick the candidate with the largest
    residual diagonal (lowest index on ties).

    Returns:
        (Z, residual trace after each pick)
    """
    X = as_points(candidates, kernel.input_dim)
    n = X.shape[0]
    if M > n:
        raise InputError(f"cannot select {M} of {n} candidates")
    diag = kernel_diag(kernel, X).astype(float)
    rows = np.zeros((M, n))
    chosen: List[int] = []
    residuals: List[float] = []
    available = np.ones(n, dtype=bool)
    for i in range(M):
        pivot = int(np.argmax(np.where(available, diag, -np.inf)))
        chosen.append(pivot)
        available[pivot] = False
        k_row = kernel_matrix(kernel, X[pivot][None, :], X)[0]
        denom = np.sqrt(diag[pivot]) if diag[pivot] > 0.0 else np.inf
        rows[i] = (k_row - rows[:i, pivot] @ rows[:i]) / denom
        diag = np.clip(diag - rows[i] ** 2, 0.0, None)
        diag[pivot] = 0.0
        residuals.append(float(np.sum(diag)))
    return X[chosen], residuals


def online_update_q(q_old: Optional[GaussianDist], Kaa: Optional[np.ndarray], Kab: Optional[np.ndarray],
                    Kbb: np.ndarray, Kbf: np.ndarray, y: np.ndarray, noise_variance: float,
                    jitter: Optional[float] = None) -> GaussianDist:
    """
    Closed-form maximiser of the online ELBO over Gaussian q(u_b).

    Everything is whitened by the prior factors K_aa = L_a L_a^T and
    K_bb = L_b L_b^T, so no inverse of S_a or K_aa is formed:

        Psi = L_a^-1 K_ab L_b^-T          P = R^-1 Psi,  R R^T = L_a^-1 S_a L_a^-T
        Phi = L_b^-1 K_bf / s
        Q~  = I - Psi^T Psi + P^T P + Phi Phi^T
        m_b = L_b Q~^-1 (Phi y / s + P^T R^-1 L_a^-1 m_a),  S_b = L_b Q~^-1 L_b^T

    Args:
        q_old: Previous q(u_a) (None for the first task)
        Kaa: Old prior covariance of u_a
        Kab: Cov(u_a, u_b)
        Kbb: Prior covariance of u_b
        Kbf: (M_b, n) Cov(u_b, f) for the task inputs
        y: Task targets
        noise_variance: s^2
        jitter: Jitter policy for the factorizations

    Returns:
        New q(u_b)
    """
    if q_old is None:
        return sgpr_optimal_q(Kbb, Kbf, y, noise_variance, jitter)
    sigma = np.sqrt(noise_variance)
    La = jittered_cholesky(Kaa, jitter)
    Lb = jittered_cholesky(Kbb, jitter)
    Psi = solve_lower(La, solve_lower(Lb, Kab.T).T)
    white_old = GaussianDist.from_factor(solve_lower(La, q_old.mean), solve_lower(La, q_old.cov_chol))
    R = white_old.cov_chol
    P = solve_lower(R, Psi)
    Phi = solve_lower(Lb, Kbf) / sigma
    Q = np.eye(Kbb.shape[0]) - Psi.T @ Psi + P.T @ P + Phi @ Phi.T
    r = Phi @ y / sigma + P.T @ solve_lower(R, white_old.mean)
    LQ = jittered_cholesky(symmetrize(Q), jitter)
    mean = Lb @ solve_upper(LQ, solve_lower(LQ, r))
    return GaussianDist.from_factor(mean, solve_lower(LQ, Lb.T).T)


def carry_forward(q_old: GaussianDist, Kaa: np.ndarray, Kab: np.ndarray, Kbb: np.ndarray,
                  jitter: Optional[float] = None) -> GaussianDist:
    """
    q(u_b) = integral p(u_b | u_a) q_old(u_a) du_a: the previous approximation
    moved to the new inducing variables without seeing any data.
    """
    La = jittered_cholesky(Kaa, jitter)
    V = solve_lower(La, Kab)
    W = solve_upper(La, V)
    SW = q_old.cov_chol.T @ W
    return GaussianDist.from_cov(W.T @ q_old.mean, Kbb - V.T @ V + SW.T @ SW, jitter)


def _expected_log_density(q_tilde_mean, q_tilde_cov, dist_mean, dist_chol) -> float:
    """E_{N(mu, C)}[log N(a; m, L L^T)]."""
    k = dist_mean.shape[0]
    trace_term = float(np.trace(solve_upper(dist_chol, solve_lower(dist_chol, q_tilde_cov))))
    diff = solve_lower(dist_chol, q_tilde_mean - dist_mean)
    return -0.5 * (k * np.log(2.0 * np.pi) + chol_logdet(dist_chol) + trace_term + float(diff @ diff))


def online_elbo(q_new: GaussianDist, q_old: GaussianDist, Kaa: np.ndarray, Kab: np.ndarray, Kbb: np.ndarray,
                old_prior_kaa: np.ndarray, task: DataBatch, Kbf: np.ndarray, kff_diag: np.ndarray,
                noise_variance: float, jitter: Optional[float] = None) -> float:
    """
    Online ELBO of q_new(u_b) given the previous approximation q_old(u_a):

        ELL(task) + KL(q~ || p_old) - KL(q~ || q_old) - KL(q_new || p(u_b))

    with q~(u_a) = integral p(u_a | u_b) q_new(u_b) du_b. The two q~ terms are
    evaluated together as E_q~[log q_old - log p_old].
    """
    Lb = jittered_cholesky(Kbb, jitter)
    prior_b = GaussianDist(np.zeros(Kbb.shape[0]), Lb)
    pred = svgp_predict(q_new, Kbb, Kbf.T, kff_diag, jitter=jitter)
    ell = expected_log_likelihood(pred, task.y, noise_variance) if task.size else 0.0

    W = solve_upper(Lb, solve_lower(Lb, Kab.T))
    V = solve_lower(Lb, Kab.T)
    mean_tilde = W.T @ q_new.mean
    SW = q_new.cov_chol.T @ W
    cov_tilde = symmetrize(Kaa - V.T @ V + SW.T @ SW)
    old_prior_chol = jittered_cholesky(old_prior_kaa, jitter)
    carry = (_expected_log_density(mean_tilde, cov_tilde, q_old.mean, q_old.cov_chol)
             - _expected_log_density(mean_tilde, cov_tilde, np.zeros(Kaa.shape[0]), old_prior_chol))
    return ell + carry - gaussian_kl(q_new, prior_b)


def _task_times(task: DataBatch) -> np.ndarray:
    if task.timestamps is not None:
        return task.timestamps
    return task.X[:, 0]


def _fit_on_first_task(state: OnlineModelState, task: DataBatch) -> OnlineModelState:
    if state.frozen:
        return state
    if task.size < 2:
        logger.warning("First task too small to fit hyperparameters; keeping the initial values")
        return replace(state, frozen=True)
    kernel, noise, _ = fit_hyperparameters(state.kernel, state.noise, task)
    return replace(state, kernel=kernel, noise=noise, frozen=True)


def _hippo_structure(state: OnlineModelState, task: DataBatch, boundary: Optional[float]):
    """Evolve the HiPPO covariances to the task's end; returns the new state and prior blocks."""
    settings = state.settings
    op = settings.operator
    step = settings.step
    kernel = state.kernel

    features = state.features
    if features is None:
        draws = sample_frequencies(kernel, settings.rff_samples, settings.seed)
        features = initial_features(op, draws)
    old_time = features.end_time
    if old_time > 0.0:
        features = checkpoint_features(features)
    tracked = state.tracked
    path = state.path
    last_timestamp = state.last_timestamp
    last_anchor = state.last_anchor

    if settings.mode is InputMode.TIMESERIES:
        times = _task_times(task)
        if task.size and state.task_index > 0 and float(np.min(times)) < state.last_timestamp - GRID_RTOL:
            logger.error(f"Task {state.task_index + 1} starts at t={np.min(times)} before t={state.last_timestamp}")
            raise InputError("timestamps must not precede the previous task")
        target = boundary if boundary is not None else (float(np.max(times)) if task.size else old_time)
        n_target = max(int(np.ceil(target / step - GRID_RTOL)), 1)
        n_steps = max(n_target - grid_steps(old_time, step), 0)
        features = advance_features(features, op, step, settings.scheme, n_steps=n_steps)
        if tracked is not None:
            tracked = advance_kfu(tracked, op, kernel, step, settings.scheme, n_steps=n_steps)
        if task.size:
            last_timestamp = max(last_timestamp, float(np.max(times)))
        sources = None
    else:
        if task.size:
            ordering = settings.ordering
            if ordering.kind is OrderingKind.RANDOM:
                ordering = replace(ordering, seed=settings.seed + state.task_index)
            ordered = task.X[order_points(task.X, ordering, kernel, last_anchor)]
            new_sources = strided_sources(ordered, settings.stride)
            features = advance_features(features, op, step, settings.scheme, sources=new_sources)
            if tracked is not None:
                tracked = advance_kfu(tracked, op, kernel, step, settings.scheme, sources=new_sources)
            path = new_sources if path is None else np.vstack([path, new_sources])
            last_anchor = ordered[-1].copy()
        sources = path

    new_end = features.end_time
    if not task.size:
        Kbf = np.zeros((op.state_dim, 0))
    elif settings.kfu_source is KfuSource.FEATURES:
        Kbf = feature_kfu(features, task.X, kernel).T
    else:
        Kbf = backfill_kfu(task.X, op, kernel, new_end, step, settings.scheme, sources=sources).rows.T
    Kbb = assemble_kuu(features, kernel)
    Kab = cross_kuu(features, old_time, kernel) if state.q is not None else None
    shared = None
    if Kab is not None and new_end == old_time:
        shared = np.eye(op.state_dim, dtype=bool)
    new_state = replace(state, features=features, tracked=tracked, path=path,
                        last_timestamp=last_timestamp, last_anchor=last_anchor)
    return new_state, Kab, Kbb, Kbf, shared


def _inducing_structure(state: OnlineModelState, task: DataBatch):
    """Choose the baseline's new inducing points; returns the new state and prior blocks."""
    settings = state.settings
    kernel = state.kernel
    M = settings.num_inducing
    Z_old = state.inducing
    seed = settings.seed + state.task_index
    if task.size == 0 and Z_old is not None:
        Z = Z_old
    elif settings.method is Method.OVC_PIVCHOL:
        candidates = task.X if Z_old is None else np.vstack([Z_old, task.X])
        Z, _ = pivoted_cholesky_select(kernel, candidates, M)
    elif settings.method is Method.OSGPR_FIXEDZ and Z_old is not None:
        Z = Z_old
    else:
        Z = resample_inducing(Z_old, task.X, M, seed)
    Kbb = kernel_matrix(kernel, Z)
    Kab, shared = None, None
    if Z_old is not None and state.q is not None:
        Kab = kernel_matrix(kernel, Z_old, Z)
        shared = np.all(Z_old[:, None, :] == Z[None, :, :], axis=2)
    Kbf = kernel_matrix(kernel, Z, task.X) if task.size else np.zeros((Z.shape[0], 0))
    return replace(state, inducing=Z), Kab, Kbb, Kbf, shared


def _with_nugget(Kbb: np.ndarray, Kab: Optional[np.ndarray], shared: Optional[np.ndarray],
                 jitter: Optional[float]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Add the inducing nugget to K_bb and to the K_ab entries of shared variables."""
    amount = default_jitter(Kbb) if jitter is None else float(jitter)
    Kbb = Kbb + amount * np.eye(Kbb.shape[0])
    if Kab is not None and shared is not None:
        Kab = Kab + amount * shared
    return Kbb, Kab


def online_update(state: OnlineModelState, task: DataBatch, boundary: Optional[float] = None) -> OnlineModelState:
    """
    Learn one task.

    Hyperparameters are fitted on the first task and frozen. The inducing
    structure is then moved to the task (HiPPO covariances evolved to the new
    boundary, or new inducing points chosen) and q is replaced by the closed-form
    maximiser of the online ELBO.

    Args:
        state: Current model
        task: Task data
        boundary: Time to evolve to in timeseries mode (default: the last timestamp)

    Returns:
        Model after the task

    Raises:
        InputError: On mismatched inputs or out-of-order timestamps
        NumericalError: On factorization failure; carries the last good state
    """
    if task.size and task.input_dim != state.kernel.input_dim:
        raise InputError(f"task inputs have dimension {task.input_dim}, kernel expects {state.kernel.input_dim}")
    index = state.task_index + 1
    with timed(logger, f"Task {index}") as wall:
        try:
            new_state = _fit_on_first_task(state, task) if state.task_index == 0 else state
            if new_state.settings.method.uses_hippo:
                new_state, Kab, Kbb, Kbf, shared = _hippo_structure(new_state, task, boundary)
            else:
                new_state, Kab, Kbb, Kbf, shared = _inducing_structure(new_state, task)
            Kbb, Kab = _with_nugget(Kbb, Kab, shared, new_state.settings.jitter)
            sigma2 = new_state.noise.noise_variance
            q = online_update_q(state.q, state.prior_kuu, Kab, Kbb, Kbf, task.y, sigma2, 0.0)
            kff = kernel_diag(new_state.kernel, task.X) if task.size else np.zeros(0)
            if state.q is None:
                elbo = elbo_gaussian(q, Kbb, Kbf, kff, task.y, sigma2, 0.0)
                prior = GaussianDist(np.zeros(Kbb.shape[0]), jittered_cholesky(Kbb, 0.0))
                carried_elbo = elbo_gaussian(prior, Kbb, Kbf, kff, task.y, sigma2, 0.0)
            else:
                elbo = online_elbo(q, state.q, state.prior_kuu, Kab, Kbb, state.prior_kuu, task, Kbf, kff,
                                   sigma2, 0.0)
                carried = carry_forward(state.q, state.prior_kuu, Kab, Kbb, 0.0)
                carried_elbo = online_elbo(carried, state.q, state.prior_kuu, Kab, Kbb, state.prior_kuu, task,
                                           Kbf, kff, sigma2, 0.0)
        except NumericalError as exc:
            logger.error(f"Task {index} failed: {exc}")
            raise NumericalError(str(exc), last_good_state=state) from exc
    record = TaskRecord(index, new_state.end_time, task.size, float(elbo), float(carried_elbo), wall[0])
    logger.info(f"Task {index}: {task.size} points, online ELBO {elbo:.4f}, {wall[0]} ms")
    return replace(new_state, q=q, prior_kuu=Kbb, task_index=index, history=new_state.history + (record,))


def ohsgpr_advance(state: OnlineModelState, task: DataBatch, boundary: Optional[float] = None) -> OnlineModelState:
    """
    HiPPO task step: checkpoint the features at the old boundary, evolve
    features and tracked rows to the new one, back-fill rows for the task
    inputs and apply the online update.

    Raises:
        StateError: If the state is not an ohsgpr model
    """
    if not state.settings.method.uses_hippo:
        raise StateError(f"ohsgpr_advance called on a {state.settings.method.value} model")
    return online_update(state, task, boundary)


def track_inputs(state: OnlineModelState, X) -> OnlineModelState:
    """
    Register prediction inputs so their K_fu rows evolve with the model
    instead of being back-filled at every prediction. Only the recurrence
    K_fu source keeps rows; feature rows are evaluated on demand.
    """
    if not state.settings.method.uses_hippo or state.settings.kfu_source is KfuSource.FEATURES:
        return state
    if state.features is None or state.end_time == 0.0:
        rows = empty_kfu(X, state.settings.operator, state.kernel)
    else:
        rows = backfill_kfu(X, state.settings.operator, state.kernel, state.end_time, state.settings.step,
                            state.settings.scheme, sources=state.path)
    return replace(state, tracked=rows)


def _cross_covariance(state: OnlineModelState, X_star: np.ndarray) -> np.ndarray:
    if not state.settings.method.uses_hippo:
        return kernel_matrix(state.kernel, X_star, state.inducing)
    if state.settings.kfu_source is KfuSource.FEATURES:
        return feature_kfu(state.features, X_star, state.kernel)
    tracked = state.tracked
    if tracked is not None and tracked.anchors.shape == X_star.shape and np.array_equal(tracked.anchors, X_star):
        return tracked.rows
    settings = state.settings
    return backfill_kfu(X_star, settings.operator, state.kernel, state.end_time, settings.step,
                        settings.scheme, sources=state.path).rows


def predict(state: OnlineModelState, X_star, include_noise: bool = True, full_cov: bool = False) -> Predictive:
    """
    Predictive of the current model; the prior predictive before any task.
    """
    X_star = as_points(X_star, state.kernel.input_dim)
    noise = state.noise.noise_variance if include_noise else None
    k_star = kernel_matrix(state.kernel, X_star) if full_cov else kernel_diag(state.kernel, X_star)
    if state.q is None:
        pred = Predictive(np.zeros(X_star.shape[0]), kernel_diag(state.kernel, X_star), False,
                          k_star if full_cov else None)
        return pred.with_noise(noise) if include_noise else pred
    K_star_u = _cross_covariance(state, X_star)
    return svgp_predict(state.q, state.prior_kuu, K_star_u, k_star, noise, 0.0)


def reconstruct_posterior(state: OnlineModelState, x) -> Predictive:
    """
    Finite-basis posterior f(x) ~ sum_m u_m g_m^(t)(x) with u ~ q(u).

    Raises:
        StateError: Unless the model is a trained ohsgpr time-series model
    """
    settings = state.settings
    if not settings.method.uses_hippo or settings.mode is not InputMode.TIMESERIES or state.q is None:
        raise StateError("reconstruction needs a trained ohsgpr time-series model")
    op = settings.operator
    G = reconstruction_weights(op)[:, None] * basis_matrix(op, state.end_time, np.ravel(x))
    mean = G.T @ state.q.mean
    variance = np.sum((state.q.cov_chol.T @ G) ** 2, axis=0)
    return Predictive(mean, variance, False)


def run_stream(state: OnlineModelState, stream: TaskStream) -> List[OnlineModelState]:
    """Learn every task in order; returns the state after each task."""
    states = []
    for task in stream.tasks:
        state = online_update(state, task)
        states.append(state)
    return states
