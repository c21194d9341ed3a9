"""Initial value problems, reference solutions, and error measurement.

The dynamics callable receives the scalar time and a flat input vector
holding (u, u', ..., u^(n-1)) in derivative-major order (all output
dimensions of u first, then of u', ...) and returns the n-th derivative
as a length-D array, or a plain float when D = 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DivergenceError

__all__ = [
    "IVProblem",
    "Reference",
    "vdp_problem",
    "linear_problem",
    "problem_by_name",
    "PROBLEMS",
    "reference_solve",
    "error_at",
]


@dataclass(frozen=True)
class IVProblem:
    """An ODE of order n with D output dimensions and initial data at t0."""

    name: str
    order: int
    dim: int
    dynamics: object
    t0: float
    t_end: float
    initial_values: tuple
    jacobian: object = None
    solution: object = None

    def __post_init__(self):
        if len(self.initial_values) != self.order * self.dim:
            raise ValueError(
                f"need {self.order * self.dim} initial values, got {len(self.initial_values)}"
            )


def vdp_problem(mu: float = 5.0) -> IVProblem:
    """Van der Pol oscillator: non-linear damping of strength mu.

    Second-order scalar problem u'' = mu (1 - u^2) u' - u on [10, 60]
    with (u, u')(10) = (2, 10), the standard non-stiff benchmark setup.
    """

    def dynamics(t, y):
        return mu * (1.0 - y[0] * y[0]) * y[1] - y[0]

    def jacobian(t, y):
        return np.array([[-2.0 * mu * y[0] * y[1] - 1.0, mu * (1.0 - y[0] * y[0])]])

    return IVProblem(
        name="vdp",
        order=2,
        dim=1,
        dynamics=dynamics,
        t0=10.0,
        t_end=60.0,
        initial_values=(2.0, 10.0),
        jacobian=jacobian,
    )


def linear_problem(rate: float = -1.0) -> IVProblem:
    """u' = rate * u with u(0) = 1; closed form exp(rate * t) attached."""

    def dynamics(t, y):
        return rate * y[0]

    def jacobian(t, y):
        return np.array([[rate]])

    def solution(t):
        return np.array([np.exp(rate * t)])

    return IVProblem(
        name="linear",
        order=1,
        dim=1,
        dynamics=dynamics,
        t0=0.0,
        t_end=1.0,
        initial_values=(1.0,),
        jacobian=jacobian,
        solution=solution,
    )


PROBLEMS = {"vdp": vdp_problem, "linear": linear_problem}


def problem_by_name(name: str) -> IVProblem:
    if name not in PROBLEMS:
        raise ValueError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}")
    return PROBLEMS[name]()


class Reference:
    """Ground-truth position (and derivatives, when available) over the span."""

    def __init__(self, problem: IVProblem, spline: CubicSpline | None):
        self._problem = problem
        self._spline = spline

    @property
    def has_derivative(self) -> bool:
        return self._spline is not None and self._problem.order >= 2

    def position(self, t) -> np.ndarray:
        """True solution u(t), shape (D,) for scalar t."""
        if self._spline is None:
            return np.atleast_1d(np.asarray(self._problem.solution(t), dtype=float))
        return np.atleast_1d(self._spline(t)[..., : self._problem.dim])

    def derivative(self, t) -> np.ndarray:
        """True first derivative u'(t); only for numerically solved problems."""
        if not self.has_derivative:
            raise ValueError("reference carries no derivative information")
        D = self._problem.dim
        return np.atleast_1d(self._spline(t)[..., D : 2 * D])


def reference_solve(problem: IVProblem, h_ref: float) -> Reference:
    """High-accuracy ground truth for grading solver output.

    Problems with a closed form use it directly.  Otherwise the order-n
    problem is reduced to a first-order system and integrated with a
    classic fourth-order one-step method at step h_ref, with cubic
    interpolation between mesh points.
    """
    if problem.solution is not None:
        return Reference(problem, None)
    if not h_ref > 0.0:
        raise ValueError(f"reference step must be > 0, got {h_ref}")
    ts, states = _rk4_dense(problem, h_ref)
    return Reference(problem, CubicSpline(ts, states, axis=0))


def error_at(trajectory, reference: Reference, t: float) -> float:
    """Euclidean position error of the solver mean at the mesh point nearest t.

    Both the solver mean and the reference are evaluated at that mesh
    time, so no interpolation error enters on the solver side.
    """
    k = trajectory.index_of(t)
    t_k = float(trajectory.ts[k])
    diff = trajectory.position_mean[k] - reference.position(t_k)
    return float(np.linalg.norm(diff))


def _rk4_dense(problem: IVProblem, h: float) -> tuple[np.ndarray, np.ndarray]:
    n, D = problem.order, problem.dim
    f = problem.dynamics
    span = problem.t_end - problem.t0
    steps = int(round(span / h))
    if steps < 1:
        raise ValueError(f"reference step {h} too large for span {span}")
    h = span / steps
    t0 = problem.t0

    if D == 1:
        # scalar fast path: the dense mesh gets long, so avoid array churn
        def rhs(t, z):
            return z[1:] + (float(f(t, z)),)
    else:
        def rhs(t, z):
            dz = np.asarray(f(t, np.asarray(z)), dtype=float)
            return tuple(z[D:]) + tuple(dz)

    state = tuple(float(v) for v in problem.initial_values)
    out = np.empty((steps + 1, n * D))
    out[0] = state
    half = 0.5 * h
    sixth = h / 6.0
    for k in range(steps):
        t = t0 + k * h
        k1 = rhs(t, state)
        k2 = rhs(t + half, tuple(s + half * d for s, d in zip(state, k1)))
        k3 = rhs(t + half, tuple(s + half * d for s, d in zip(state, k2)))
        k4 = rhs(t + h, tuple(s + h * d for s, d in zip(state, k3)))
        state = tuple(
            s + sixth * (a + 2.0 * (b + c) + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )
        if not all(np.isfinite(state)):
            raise DivergenceError(f"reference solve diverged on {problem.name!r}", t=t + h)
        out[k + 1] = state
    ts = t0 + h * np.arange(steps + 1)
    return ts, out
