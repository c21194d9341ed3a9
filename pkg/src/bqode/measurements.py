"""Gradient-measurement generators for the filtering loop.

Given the predicted belief N(m, P) over the dynamics' inputs and the
dynamics f itself, each generator produces an observation (y, R) of the
highest modeled derivative:

* MaxLikelihood evaluates f once at the predicted mean, with R = 0.
* MonteCarloIntegration averages f over draws from the belief; the
  spread of the evaluations becomes R.  Known to destabilize filters on
  volatile dynamics; exposed for study and labeled experimental.
* TaylorLinearization propagates the belief through a first-order
  expansion, which needs a user-supplied Jacobian.
* BayesianQuadrature evaluates f on a deterministic node set and uses
  the GP quadrature weights and integral variance.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .bayes_quad import QuadratureRule, SEKernel, build_rule, grid_nodes, hermite_nodes
from .errors import DynamicsError
from .gauss_filter import Measurement
from .linalg import robust_cholesky

__all__ = [
    "MeasurementGenerator",
    "MaxLikelihood",
    "MonteCarloIntegration",
    "TaylorLinearization",
    "BayesianQuadrature",
    "measure_ml",
    "measure_mc",
    "measure_taylor",
    "measure_bq",
]


def measure_ml(f, t: float, mean) -> Measurement:
    """Single evaluation at the predicted mean, reported as noise-free."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    if not np.all(np.isfinite(mean)):
        raise DynamicsError("predicted mean is non-finite", t=t)
    y = _eval(f, t, mean)
    return Measurement(y=y, R=np.zeros((y.shape[0], y.shape[0])), evals_used=1)


def measure_mc(f, t: float, mean, cov, draws: int, rng: np.random.Generator) -> Measurement:
    """Monte Carlo moments of f under the input belief.

    y is the sample mean of f over `draws` draws from N(mean, cov); R is
    the population second moment minus y y^T, clamped to a non-negative
    diagonal.  Deterministic given the generator state.
    """
    if draws < 2:
        raise ValueError(f"Monte Carlo integration needs at least 2 draws, got {draws}")
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        cov = cov.reshape(1, 1)
    L = robust_cholesky(cov, context="Monte Carlo input sampling")
    values = np.array(
        [_eval(f, t, mean + L @ rng.standard_normal(mean.shape[0])) for _ in range(draws)]
    )
    y = values.mean(axis=0)
    R = values.T @ values / draws - np.outer(y, y)
    return Measurement(y=y, R=_clamp_diag(R), evals_used=draws)


def measure_taylor(f, jac, t: float, mean, cov) -> Measurement:
    """First-order propagation of the belief through f.

    Exact for affine dynamics: y = f(mean), R = J cov J^T with J the
    Jacobian of f in the input variables.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        cov = cov.reshape(1, 1)
    y = _eval(f, t, mean)
    J = np.atleast_2d(np.asarray(jac(t, mean), dtype=float))
    if not np.all(np.isfinite(J)):
        raise DynamicsError("Jacobian returned a non-finite value", t=t)
    if J.shape != (y.shape[0], mean.shape[0]):
        raise ValueError(f"Jacobian shape {J.shape} does not match f: {y.shape[0]}x{mean.shape[0]}")
    R = J @ cov @ J.T
    return Measurement(y=y, R=_clamp_diag(R), evals_used=1, jac_evals_used=1)


def measure_bq(f, t: float, rule: QuadratureRule) -> Measurement:
    """Sigma-point estimate of the Gaussian integral of f.

    The rule must have been built for the current predicted belief.  All
    output dimensions share the rule's integral variance.
    """
    values = np.array([_eval(f, t, node) for node in rule.nodes])
    y = rule.integrate(values)
    R = max(rule.variance, 0.0) * np.eye(y.shape[0])
    return Measurement(y=y, R=R, evals_used=rule.nodes.shape[0])


class MeasurementGenerator(ABC):
    """One measurement scheme, pluggable into the filter loop."""

    name: str = ""
    seed: int | None = None

    @abstractmethod
    def measure(self, f, t: float, mean, cov, rng=None) -> Measurement:
        """Produce (y, R) from the predicted input belief N(mean, cov)."""


class MaxLikelihood(MeasurementGenerator):
    name = "ml"

    def measure(self, f, t, mean, cov=None, rng=None) -> Measurement:
        return measure_ml(f, t, mean)


class MonteCarloIntegration(MeasurementGenerator):
    name = "mc-filter"

    def __init__(self, draws: int, seed: int):
        if draws < 2:
            raise ValueError(f"Monte Carlo integration needs at least 2 draws, got {draws}")
        self.draws = draws
        self.seed = seed

    def measure(self, f, t, mean, cov, rng=None) -> Measurement:
        if rng is None:
            rng = np.random.default_rng(self.seed)
        return measure_mc(f, t, mean, cov, self.draws, rng)


class TaylorLinearization(MeasurementGenerator):
    name = "taylor"

    def __init__(self, jacobian):
        if jacobian is None:
            raise ValueError("Taylor linearization requires a Jacobian callable")
        self.jacobian = jacobian

    def measure(self, f, t, mean, cov, rng=None) -> Measurement:
        return measure_taylor(f, self.jacobian, t, mean, cov)


class BayesianQuadrature(MeasurementGenerator):
    name = "bq"

    def __init__(
        self,
        n_nodes: int,
        kernel: SEKernel = SEKernel(lengthscale=1.0, variance=1.0),
        scheme: str = "grid",
        spread: float = 2.0,
    ):
        if n_nodes < 1:
            raise ValueError(f"node count must be >= 1, got {n_nodes}")
        if scheme not in ("grid", "hermite"):
            raise ValueError(f"unknown node scheme {scheme!r}")
        self.n_nodes = n_nodes
        self.kernel = kernel
        self.scheme = scheme
        self.spread = spread

    def nodes_for(self, mean, cov) -> np.ndarray:
        if self.scheme == "grid":
            return grid_nodes(mean, cov, self.n_nodes, spread=self.spread)
        return hermite_nodes(mean, cov, self.n_nodes)[0]

    def measure(self, f, t, mean, cov, rng=None) -> Measurement:
        rule = build_rule(self.kernel, self.nodes_for(mean, cov), mean, cov)
        return measure_bq(f, t, rule)


def _eval(f, t: float, x: np.ndarray) -> np.ndarray:
    out = np.atleast_1d(np.asarray(f(t, x), dtype=float))
    if not np.all(np.isfinite(out)):
        raise DynamicsError("dynamics returned a non-finite value", t=t)
    return out


def _clamp_diag(R: np.ndarray) -> np.ndarray:
    R = R.copy()
    d = np.einsum("ii->i", R)
    d[d < 0.0] = 0.0
    return R
