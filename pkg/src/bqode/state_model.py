"""Integrated-Wiener-process state-space prior.

The solution and its first q-1 derivatives are modeled as a q-times
integrated Wiener process with per-level damping factors.  For a fixed
step size h the exact discrete transition A(h) and process noise Q(h)
have closed forms, computed here.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

__all__ = ["IWPModel", "TransitionPair", "transition_matrix", "process_noise", "transition_pair"]


@dataclass(frozen=True)
class IWPModel:
    """Prior over (u, u', ..., u^(q-1)) driven by white noise on u^(q).

    Parameters
    ----------
    q : int
        State order: number of modeled derivatives.  Must be at least
        n+1 for an ODE of order n.
    sigma2 : float
        Diffusion variance of the driving noise, > 0.
    damping : tuple of float, optional
        Damping factors (f_1, ..., f_{q-1}) on the first off-diagonal
        of the drift.  Defaults to (1, 2, ..., q-1).
    """

    q: int
    sigma2: float
    damping: tuple = field(default=None)

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"state order q must be >= 1, got {self.q}")
        if not self.sigma2 > 0.0:
            raise ValueError(f"diffusion variance must be > 0, got {self.sigma2}")
        damping = self.damping
        if damping is None:
            damping = tuple(float(i) for i in range(1, self.q))
        else:
            damping = tuple(float(f) for f in damping)
        if len(damping) != self.q - 1:
            raise ValueError(
                f"damping must have q-1 = {self.q - 1} entries, got {len(damping)}"
            )
        object.__setattr__(self, "damping", damping)

    def drift(self) -> np.ndarray:
        """Continuous-time drift matrix (damping on the first off-diagonal)."""
        F = np.zeros((self.q, self.q))
        for i, f in enumerate(self.damping):
            F[i, i + 1] = f
        return F

    def in_derivative_basis(self) -> "IWPModel":
        """Equivalent model whose components are the physical derivatives.

        The damping factors rescale the internal state representation:
        component i carries u^(i-1) divided by the cumulative damping
        product.  Re-expressing the process in plain derivative
        coordinates cancels the damping out of the transition, leaving an
        undamped model whose diffusion scale acts on the highest physical
        derivative.  The filter loop runs in these coordinates so that
        observation, initialization, and reported moments all refer to
        actual derivatives.
        """
        if all(f == 1.0 for f in self.damping):
            return self
        return IWPModel(q=self.q, sigma2=self.sigma2, damping=(1.0,) * (self.q - 1))


@dataclass(frozen=True)
class TransitionPair:
    """Discrete transition A and process noise Qh for one step of size h."""

    A: np.ndarray
    Qh: np.ndarray
    h: float


def transition_matrix(model: IWPModel, h: float) -> np.ndarray:
    """Exact discrete state transition over a step of size h.

    Entry (i, j), zero-based, is h^(j-i)/(j-i)! times the product of the
    damping factors between levels i and j; zero below the diagonal.
    Equals the matrix exponential of h times the drift.
    """
    _check_step(h)
    q, f = model.q, model.damping
    A = np.zeros((q, q))
    for i in range(q):
        A[i, i] = 1.0
        prod = 1.0
        for j in range(i + 1, q):
            prod *= f[j - 1]
            A[i, j] = h ** (j - i) / factorial(j - i) * prod
    return A


def process_noise(model: IWPModel, h: float) -> np.ndarray:
    """Exact discrete process-noise covariance over a step of size h.

    Closed form of the integral of A(s) L L^T A(s)^T over [0, h], where
    L injects the driving noise on the highest modeled derivative.
    Symmetric PSD by construction.
    """
    _check_step(h)
    q, f = model.q, model.damping
    # tail[i] = product of damping factors from level i to the top
    tail = np.ones(q)
    for i in range(q - 2, -1, -1):
        tail[i] = tail[i + 1] * f[i]
    Q = np.empty((q, q))
    for i in range(q):
        for j in range(i, q):
            power = 2 * q - 1 - i - j
            Q[i, j] = Q[j, i] = (
                model.sigma2
                * tail[i]
                * tail[j]
                * h**power
                / (factorial(q - 1 - i) * factorial(q - 1 - j) * power)
            )
    return Q


def transition_pair(model: IWPModel, h: float) -> TransitionPair:
    """Bundle A(h) and Q(h) for reuse across a fixed-step run."""
    return TransitionPair(A=transition_matrix(model, h), Qh=process_noise(model, h), h=float(h))


def _check_step(h: float) -> None:
    if not h > 0.0:
        raise ValueError(f"step size must be > 0, got {h}")
