"""Perturbation-sampling solver: noise the steps of a deterministic map.

Each sample path iterates the deterministic base solver (one filter step
with the maximum-likelihood measurement) and adds an independent Gaussian
perturbation to the state mean after every step.  Collecting S paths
gives an empirical solution measure summarized by its pointwise mean and
variance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DynamicsError
from .gauss_filter import (
    GaussianState,
    ObservationOperator,
    SolutionTrajectory,
    _mesh,
    _project_inputs,
    initial_state,
    mesh_index,
    predict,
    update,
)
from .linalg import robust_cholesky
from .measurements import MaxLikelihood, MeasurementGenerator
from .state_model import IWPModel, process_noise, transition_pair

__all__ = ["PerturbedSolverConfig", "EmpiricalMeasure", "sample_path", "empirical_measure"]


@dataclass(frozen=True)
class PerturbedSolverConfig:
    """Configuration of the sampling solver.

    noise is either a scalar multiplier applied to the prior's discrete
    process noise Q(h) (so the perturbation and the filter share one
    calibration; 0 recovers the deterministic base solver) or an explicit
    per-dimension covariance matrix of shape (q, q).  base is the
    measurement scheme of the underlying deterministic solver and must be
    deterministic.
    """

    model: IWPModel
    samples: int
    seed: int
    noise: object = 1.0
    base: MeasurementGenerator = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"sample count must be >= 1, got {self.samples}")
        if self.base is None:
            object.__setattr__(self, "base", MaxLikelihood())

    def noise_matrix(self, h: float) -> np.ndarray:
        if np.isscalar(self.noise):
            if float(self.noise) < 0.0:
                raise ValueError(f"noise multiplier must be >= 0, got {self.noise}")
            return float(self.noise) * process_noise(self.model.in_derivative_basis(), h)
        Sigma = np.asarray(self.noise, dtype=float)
        q = self.model.q
        if Sigma.shape != (q, q):
            raise ValueError(f"noise covariance must be {q}x{q}, got {Sigma.shape}")
        return Sigma


@dataclass(frozen=True)
class EmpiricalMeasure:
    """S sampled trajectories with pointwise mean and (sample) variance."""

    ts: np.ndarray
    paths: np.ndarray  # (S, K+1, D, q)
    mean_path: np.ndarray  # (K+1, D, q)
    var_path: np.ndarray  # (K+1, D, q)
    f_evals: int

    @property
    def samples(self) -> int:
        return self.paths.shape[0]

    @property
    def position_mean(self) -> np.ndarray:
        return self.mean_path[:, :, 0]

    @property
    def position_sd(self) -> np.ndarray:
        return np.sqrt(np.clip(self.var_path[:, :, 0], 0.0, None))

    def index_of(self, t: float) -> int:
        return mesh_index(self.ts, t)


def sample_path(
    config: PerturbedSolverConfig, problem, h: float, stream: np.random.Generator
) -> SolutionTrajectory:
    """One perturbed trajectory; deterministic given the random stream.

    The perturbation is added to every state component after each base
    step.  The covariance recursion of the base filter does not depend on
    the perturbed means, so the returned covariances are those of the
    deterministic base solver; with zero noise the whole trajectory is.
    """
    ts = _mesh(problem.t0, problem.t_end, h)
    trans = transition_pair(config.model.in_derivative_basis(), h)
    Sigma = config.noise_matrix(h)
    L = robust_cholesky(Sigma, context="step perturbation") if Sigma.any() else None
    state, f_evals = initial_state(problem, config.model)
    obs = ObservationOperator(n=problem.order, q=config.model.q)
    f = problem.dynamics
    D, q = state.dim, state.q

    means = np.empty((ts.shape[0], D, q))
    covs = np.empty((ts.shape[0], D, q, q))
    means[0], covs[0] = state.m, state.P
    for k in range(1, ts.shape[0]):
        pred = predict(state, trans)
        mean_in, cov_in = _project_inputs(pred, problem.order)
        try:
            meas = config.base.measure(f, float(ts[k]), mean_in, cov_in)
        except DynamicsError as err:
            raise DivergenceError(f"sample path diverged at step {k}", t=float(ts[k])) from err
        f_evals += meas.evals_used
        state = update(pred, obs, meas)
        if L is not None:
            perturbed = state.m + (L @ stream.standard_normal((D, q)).T).T
            state = GaussianState(t=state.t, m=perturbed, P=state.P)
        if not np.all(np.isfinite(state.m)):
            raise DivergenceError(f"sample path diverged at step {k}", t=float(ts[k]))
        means[k], covs[k] = state.m, state.P
    return SolutionTrajectory(ts=ts, means=means, covs=covs, f_evals=f_evals)


def empirical_measure(config: PerturbedSolverConfig, problem, h: float) -> EmpiricalMeasure:
    """Run S independent sample paths and aggregate them pointwise.

    Per-sample streams are spawned from the master seed by sample index,
    so growing S extends the path set without changing existing paths.
    Needs S >= 2 for the variance to be defined.
    """
    if config.samples < 2:
        raise ValueError(f"empirical variance needs at least 2 samples, got {config.samples}")
    children = np.random.SeedSequence(config.seed).spawn(config.samples)
    paths = []
    ts = None
    f_evals = 0
    failures = []
    for i, child in enumerate(children):
        try:
            traj = sample_path(config, problem, h, np.random.default_rng(child))
        except DivergenceError as err:
            failures.append((i, err))
            continue
        ts = traj.ts
        paths.append(traj.means)
        f_evals += traj.f_evals
    if failures:
        indices = ", ".join(str(i) for i, _ in failures)
        raise DivergenceError(f"sample paths [{indices}] diverged: {failures[0][1]}")
    paths = np.array(paths)
    return EmpiricalMeasure(
        ts=ts,
        paths=paths,
        mean_path=paths.mean(axis=0),
        var_path=paths.var(axis=0, ddof=1),
        f_evals=f_evals,
    )
