"""Bayesian quadrature against Gaussian weight functions.

A squared-exponential GP is conditioned on function values at a node set
and integrated against a Gaussian measure N(mu, Sigma).  For this kernel
both the kernel-mean vector and the double kernel integral have closed
forms, so the posterior mean of the integral reduces to a sigma-point
rule with weights K^{-1} alpha, and the posterior variance to the double
integral minus alpha^T K^{-1} alpha.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import QuadratureConditioningError
from .linalg import robust_cholesky

__all__ = [
    "SEKernel",
    "QuadratureRule",
    "kernel_mean",
    "double_integral",
    "grid_nodes",
    "hermite_nodes",
    "build_rule",
]

# Jitter multiples of the kernel output variance, tried in order.  The
# first attempt is exact so analytically trivial matrices (e.g. a single
# node) produce exact weights; escalation only happens when the Cholesky
# factorization rejects the kernel matrix.
_JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class SEKernel:
    """Squared-exponential covariance with lengthscale > 0 and output variance > 0."""

    lengthscale: float
    variance: float

    def __post_init__(self):
        if not self.lengthscale > 0.0:
            raise ValueError(f"lengthscale must be > 0, got {self.lengthscale}")
        if not self.variance > 0.0:
            raise ValueError(f"output variance must be > 0, got {self.variance}")

    def matrix(self, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
        """Kernel matrix between two point sets of shape (n, d) and (m, d)."""
        x = _as_points(x)
        y = x if y is None else _as_points(y)
        sq = np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=-1)
        return self.variance * np.exp(-0.5 * sq / self.lengthscale**2)


@dataclass(frozen=True)
class QuadratureRule:
    """Sigma-point weights and integral variance for one Gaussian measure.

    `weights @ f(nodes)` estimates the integral of f against
    N(measure_mean, measure_cov); `variance` is the GP posterior variance
    of that integral estimate.
    """

    nodes: np.ndarray
    weights: np.ndarray
    variance: float
    kernel: SEKernel
    measure_mean: np.ndarray
    measure_cov: np.ndarray

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum of function values taken at `nodes` (row per node)."""
        return self.weights @ np.asarray(values, dtype=float)


def kernel_mean(kernel: SEKernel, node, mu, Sigma) -> float:
    """Integral of k(x, node) against N(x; mu, Sigma).

    Closed form: the kernel is itself an unnormalized Gaussian, so the
    integral is a Gaussian convolution with covariance lam^2 I + Sigma.
    """
    node = np.atleast_1d(np.asarray(node, dtype=float))
    return float(_kernel_means(kernel, node[None, :], *_measure(mu, Sigma))[0])


def double_integral(kernel: SEKernel, Sigma) -> float:
    """Double integral of k(x, x') against N(mu, Sigma) in both arguments.

    Independent of mu; equals variance * det(I + 2 Sigma / lam^2)^{-1/2}.
    """
    Sigma = _as_cov(Sigma)
    _require_psd(Sigma)
    d = Sigma.shape[0]
    lam2 = kernel.lengthscale**2
    C = lam2 * np.eye(d) + 2.0 * Sigma
    det_ratio = np.linalg.det(C) / lam2**d
    return float(kernel.variance / np.sqrt(det_ratio))


def grid_nodes(mu, Sigma, n_nodes: int, spread: float = 2.0) -> np.ndarray:
    """Deterministic node grid scaled to the measure N(mu, Sigma).

    One input dimension: mu + sqrt(Sigma) * linspace(-spread, spread, n).
    Higher dimensions: the center, then +/- c marginal standard
    deviations along each coordinate axis for c = 1, 2, ... until n
    nodes are emitted.  Returns an (n, d) array.
    """
    if n_nodes < 1:
        raise ValueError(f"node count must be >= 1, got {n_nodes}")
    if not spread > 0.0:
        raise ValueError(f"spread must be > 0, got {spread}")
    mu, Sigma = _measure(mu, Sigma)
    d = mu.shape[0]
    if d == 1:
        if n_nodes == 1:
            return mu[None, :].copy()
        offsets = np.linspace(-spread, spread, n_nodes)
        return mu[None, :] + np.sqrt(Sigma[0, 0]) * offsets[:, None]
    var = np.diag(Sigma)
    if np.any(var < 0.0):
        warnings.warn(
            "negative marginal variances clamped to zero in grid node generation",
            RuntimeWarning,
            stacklevel=2,
        )
    sd = np.sqrt(np.clip(var, 0.0, None))
    nodes = [mu]
    c = 1.0
    while len(nodes) < n_nodes:
        for j in range(d):
            step = np.zeros(d)
            step[j] = c * sd[j]
            nodes.append(mu + step)
            nodes.append(mu - step)
        c += 1.0
    return np.array(nodes[:n_nodes])


def hermite_nodes(mu, Sigma, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes mapped to N(mu, Sigma), with classic weights.

    Nodes are mu + sqrt(2 Sigma) r for physicists' Hermite roots r; the
    returned weights are normalized to sum to one, so their dot product
    with function values is the classic Gauss-Hermite estimate of the
    Gaussian expectation.  Multivariate measures use a tensor grid
    truncated to the n_nodes points of largest product weight.
    """
    if n_nodes < 1:
        raise ValueError(f"node count must be >= 1, got {n_nodes}")
    mu, Sigma = _measure(mu, Sigma)
    d = mu.shape[0]
    roots, w = np.polynomial.hermite.hermgauss(n_nodes)
    w = w / w.sum()
    if d == 1:
        nodes = mu[None, :] + np.sqrt(2.0 * Sigma[0, 0]) * roots[:, None]
        return nodes, w
    L = robust_cholesky(Sigma, context="Hermite node generation")
    grids = np.meshgrid(*([roots] * d), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=-1)
    wprod = np.ones(z.shape[0])
    for g in np.meshgrid(*([w] * d), indexing="ij"):
        wprod = wprod * g.ravel()
    keep = np.argsort(-wprod, kind="stable")[:n_nodes]
    keep.sort()  # stable ordering: tensor order among the kept points
    z, wprod = z[keep], wprod[keep]
    nodes = mu[None, :] + np.sqrt(2.0) * z @ L.T
    return nodes, wprod / wprod.sum()


def build_rule(kernel: SEKernel, nodes, mu, Sigma) -> QuadratureRule:
    """Condition the kernel on a node set and derive weights and variance.

    Duplicate nodes (pairwise distance below 1e-10 lengthscale) are
    dropped.  The kernel solve starts exact and escalates diagonal jitter
    when factorization fails; if the ladder is exhausted a
    QuadratureConditioningError is raised.
    """
    mu, Sigma = _measure(mu, Sigma)
    nodes = _as_points(nodes)
    if nodes.shape[1] != mu.shape[0]:
        raise ValueError(
            f"nodes have dimension {nodes.shape[1]}, measure has dimension {mu.shape[0]}"
        )
    nodes = _deduplicate(nodes, tol=1e-10 * kernel.lengthscale)
    alpha = _kernel_means(kernel, nodes, mu, Sigma)
    K = kernel.matrix(nodes)
    weights = _solve_weights(K, alpha, kernel, nodes)
    variance = double_integral(kernel, Sigma) - float(alpha @ weights)
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        variance=max(variance, 0.0),
        kernel=kernel,
        measure_mean=mu,
        measure_cov=Sigma,
    )


def _solve_weights(K, alpha, kernel, nodes) -> np.ndarray:
    n = K.shape[0]
    for jitter in _JITTER_LADDER:
        try:
            factor = cho_factor(K + jitter * kernel.variance * np.eye(n), lower=True)
            weights = cho_solve(factor, alpha)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(weights)):
            return weights
    spread = float(np.max(np.linalg.norm(nodes - nodes.mean(axis=0), axis=1))) if n else 0.0
    raise QuadratureConditioningError(n_nodes=n, node_spread=spread)


def _kernel_means(kernel: SEKernel, nodes: np.ndarray, mu: np.ndarray, Sigma: np.ndarray) -> np.ndarray:
    _require_psd(Sigma)
    d = mu.shape[0]
    lam2 = kernel.lengthscale**2
    C = lam2 * np.eye(d) + Sigma
    factor = cho_factor(C, lower=True)
    det_ratio = np.prod(np.diag(factor[0]) ** 2) / lam2**d
    diff = nodes - mu[None, :]
    quad = np.sum(diff * cho_solve(factor, diff.T).T, axis=1)
    return kernel.variance / np.sqrt(det_ratio) * np.exp(-0.5 * quad)


def _deduplicate(nodes: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for node in nodes:
        if all(np.linalg.norm(node - other) > tol for other in kept):
            kept.append(node)
    return np.array(kept)


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _as_cov(Sigma) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim == 0:
        Sigma = Sigma[None, None]
    elif Sigma.ndim == 1:
        Sigma = np.diag(Sigma)
    return Sigma


def _measure(mu, Sigma) -> tuple[np.ndarray, np.ndarray]:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    Sigma = _as_cov(Sigma)
    if Sigma.shape != (mu.shape[0], mu.shape[0]):
        raise ValueError(f"measure covariance {Sigma.shape} does not match mean {mu.shape}")
    return mu, Sigma


def _require_psd(Sigma: np.ndarray) -> None:
    if not np.allclose(Sigma, Sigma.T, atol=1e-9 * max(1.0, float(np.abs(Sigma).max()))):
        raise ValueError("measure covariance must be symmetric")
    w = np.linalg.eigvalsh(Sigma)
    if w[0] < -1e-9 * max(1.0, float(w[-1])):
        raise ValueError(f"measure covariance must be PSD; min eigenvalue {w[0]:.3e}")
