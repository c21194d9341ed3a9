"""Kalman filtering loop over the integrated-Wiener-process prior.

Each step predicts the belief forward with the exact discrete transition,
asks a measurement generator for an observation (y, R) of the highest
modeled derivative of the ODE, and conditions the belief on it.  Output
dimensions are modeled as independent processes: the state carries one
mean vector and covariance per dimension, and the update touches each
dimension separately through its scalar innovation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DynamicsError, SingularInnovationError
from .linalg import clamp_tiny_negative_diag, symmetrize
from .state_model import IWPModel, TransitionPair, transition_pair

__all__ = [
    "GaussianState",
    "Measurement",
    "ObservationOperator",
    "SolutionTrajectory",
    "predict",
    "update",
    "initial_state",
    "solve",
    "mesh_index",
]


@dataclass(frozen=True)
class GaussianState:
    """Filter belief at time t: mean m (D, q) and covariance P (D, q, q).

    Scalar problems may pass m of shape (q,) and P of shape (q, q); the
    leading output-dimension axis is added automatically.
    """

    t: float
    m: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.m, dtype=float))
        P = np.asarray(self.P, dtype=float)
        if P.ndim == 0:
            P = P.reshape(1, 1, 1)
        elif P.ndim == 2:
            P = P[None, :, :]
        if P.shape != (m.shape[0], m.shape[1], m.shape[1]):
            raise ValueError(f"covariance shape {P.shape} does not match mean shape {m.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "P", P)

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    @property
    def q(self) -> int:
        return self.m.shape[1]


@dataclass(frozen=True)
class Measurement:
    """Observation of the n-th derivative: value y (D,), noise R (D, D) diagonal.

    evals_used counts dynamics evaluations; Jacobian evaluations (Taylor
    linearization only) are counted separately.
    """

    y: np.ndarray
    R: np.ndarray
    evals_used: int
    jac_evals_used: int = 0

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        R = np.asarray(self.R, dtype=float)
        if R.ndim == 0:
            R = R[None, None]
        elif R.ndim == 1:
            R = np.diag(R)
        if R.shape != (y.shape[0], y.shape[0]):
            raise ValueError(f"noise shape {R.shape} does not match value shape {y.shape}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "R", R)


@dataclass(frozen=True)
class ObservationOperator:
    """Selector of the state component that models the n-th derivative."""

    n: int
    q: int
    H: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 0 <= self.n < self.q:
            raise ValueError(f"derivative order {self.n} outside state of order {self.q}")
        H = np.zeros((1, self.q))
        H[0, self.n] = 1.0
        object.__setattr__(self, "H", H)

    @property
    def index(self) -> int:
        return self.n


@dataclass(frozen=True)
class SolutionTrajectory:
    """Filtering means and covariances on the solve mesh.

    means has shape (K+1, D, q), covs (K+1, D, q, q); f_evals counts all
    dynamics evaluations including the one spent on initialization.
    """

    ts: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    f_evals: int
    jac_evals: int = 0

    @property
    def position_mean(self) -> np.ndarray:
        """Mean of the solution itself, shape (K+1, D)."""
        return self.means[:, :, 0]

    @property
    def position_sd(self) -> np.ndarray:
        """Posterior standard deviation of the solution, shape (K+1, D)."""
        return np.sqrt(np.clip(self.covs[:, :, 0, 0], 0.0, None))

    def index_of(self, t: float) -> int:
        """Index of the mesh point closest to t; t must lie inside the span."""
        return mesh_index(self.ts, t)


def mesh_index(ts: np.ndarray, t: float) -> int:
    """Index of the mesh point closest to t; t must lie inside the span."""
    lo, hi = min(ts[0], ts[-1]), max(ts[0], ts[-1])
    if not lo - 1e-9 <= t <= hi + 1e-9:
        raise ValueError(f"t={t} outside the solved span [{lo}, {hi}]")
    return int(np.argmin(np.abs(ts - t)))


def predict(state: GaussianState, trans: TransitionPair) -> GaussianState:
    """Propagate the belief one step: m -> A m, P -> A P A^T + Qh."""
    A, Qh = trans.A, trans.Qh
    if A.shape[0] != state.q:
        raise ValueError(f"transition of order {A.shape[0]} applied to state of order {state.q}")
    m = state.m @ A.T
    P = symmetrize(A @ state.P @ A.T + Qh)
    return GaussianState(t=state.t + trans.h, m=m, P=clamp_tiny_negative_diag(P))


def update(state: GaussianState, obs: ObservationOperator, meas: Measurement) -> GaussianState:
    """Condition the predicted belief on a derivative measurement.

    Standard scalar Kalman update per output dimension, with the
    posterior covariance symmetrized and tiny negative diagonal entries
    clamped to zero.
    """
    if obs.q != state.q:
        raise ValueError(f"observation built for order {obs.q}, state has order {state.q}")
    if meas.y.shape[0] != state.dim:
        raise ValueError(f"measurement dimension {meas.y.shape[0]} != state dimension {state.dim}")
    r = np.diag(meas.R)
    if np.any(r < 0.0):
        raise ValueError("measurement noise variances must be >= 0")
    i = obs.index
    z = meas.y - state.m[:, i]
    S = state.P[:, i, i] + r
    if np.any(S <= 0.0):
        raise SingularInnovationError(t=state.t)
    K = state.P[:, :, i] / S[:, None]
    m = state.m + K * z[:, None]
    P = state.P - K[:, :, None] * state.P[:, i, :][:, None, :]
    return GaussianState(t=state.t, m=m, P=clamp_tiny_negative_diag(symmetrize(P)))


def initial_state(problem, model: IWPModel) -> tuple[GaussianState, int]:
    """Exact-information initialization at t0.

    Components modeling the known derivatives take the initial values
    with zero variance; the component modeling the n-th derivative takes
    one dynamics evaluation with zero variance; any higher components
    start at zero with the prior variance.  Returns the state and the
    number of dynamics evaluations spent (always 1).
    """
    n, D, q = problem.order, problem.dim, model.q
    if q < n + 1:
        raise ValueError(f"state order q={q} must be at least n+1={n + 1} for this problem")
    inits = np.asarray(problem.initial_values, dtype=float).reshape(n, D)
    deriv_n = _eval_dynamics(problem, problem.t0, problem.initial_values)
    m = np.zeros((D, q))
    m[:, :n] = inits.T
    m[:, n] = deriv_n
    P = np.zeros((D, q, q))
    for j in range(n + 1, q):
        P[:, j, j] = model.sigma2
    return GaussianState(t=problem.t0, m=m, P=P), 1


def solve(problem, model: IWPModel, generator, h: float) -> SolutionTrajectory:
    """Run the filter over the problem's time span with fixed step h.

    The step must divide the span to within 1e-9.  The generator is
    called once per step with the predicted belief projected onto the
    dynamics' input components (derivatives 0..n-1 of every output
    dimension, block-diagonal covariance across dimensions).  The belief
    is carried in derivative coordinates (see
    IWPModel.in_derivative_basis), so state component i is the posterior
    over u^(i) itself.
    """
    ts = _mesh(problem.t0, problem.t_end, h)
    trans = transition_pair(model.in_derivative_basis(), h)
    state, f_evals = initial_state(problem, model)
    jac_evals = 0
    n, D, q = problem.order, problem.dim, model.q
    obs = ObservationOperator(n=n, q=q)
    rng = _generator_rng(generator)
    f = problem.dynamics

    means = np.empty((ts.shape[0], D, q))
    covs = np.empty((ts.shape[0], D, q, q))
    means[0], covs[0] = state.m, state.P
    for k in range(1, ts.shape[0]):
        t_k = float(ts[k])
        pred = predict(state, trans)
        mean_in, cov_in = _project_inputs(pred, n)
        meas = generator.measure(f, t_k, mean_in, cov_in, rng=rng)
        f_evals += meas.evals_used
        jac_evals += meas.jac_evals_used
        state = update(pred, obs, meas)
        if not (np.all(np.isfinite(state.m)) and np.all(np.isfinite(state.P))):
            raise DivergenceError("filter state became non-finite", t=t_k)
        means[k], covs[k] = state.m, state.P
    return SolutionTrajectory(ts=ts, means=means, covs=covs, f_evals=f_evals, jac_evals=jac_evals)


def _mesh(t0: float, t_end: float, h: float) -> np.ndarray:
    if not h > 0.0:
        raise ValueError(f"step size must be > 0, got {h}")
    span = t_end - t0
    steps = int(round(span / h))
    if steps < 1 or abs(steps * h - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"step {h} does not divide the span [{t0}, {t_end}]")
    return t0 + h * np.arange(steps + 1)


def _project_inputs(state: GaussianState, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Input-space mean (derivative-major, length nD) and block-diagonal covariance."""
    D = state.dim
    mean = state.m[:, :n].T.ravel()
    cov = np.zeros((n * D, n * D))
    for d in range(D):
        idx = d + D * np.arange(n)
        cov[np.ix_(idx, idx)] = state.P[d, :n, :n]
    return mean, cov


def _eval_dynamics(problem, t: float, y) -> np.ndarray:
    out = np.atleast_1d(np.asarray(problem.dynamics(t, np.asarray(y, dtype=float)), dtype=float))
    if not np.all(np.isfinite(out)):
        raise DynamicsError("dynamics returned a non-finite value", t=t)
    return out


def _generator_rng(generator):
    seed = getattr(generator, "seed", None)
    return None if seed is None else np.random.default_rng(seed)
