"""Small dense linear-algebra helpers used throughout the filter stack."""

import warnings

import numpy as np


def symmetrize(P: np.ndarray) -> np.ndarray:
    """Return (P + P^T)/2, averaging away round-off asymmetry."""
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def clamp_tiny_negative_diag(P: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Zero diagonal entries that went negative by at most `floor`.

    Larger negative entries are left untouched so genuine indefiniteness
    stays visible to downstream checks.
    """
    P = P.copy()
    d = np.einsum("...ii->...i", P)
    d[(d < 0.0) & (d >= -floor)] = 0.0
    return P


def robust_cholesky(Sigma: np.ndarray, context: str = "") -> np.ndarray:
    """Lower-triangular factor L with L @ L.T = Sigma for a PSD matrix.

    Falls back to an eigendecomposition with negative eigenvalues clamped
    to zero when the Cholesky factorization fails (singular or slightly
    indefinite input), emitting a conditioning warning.  Raises ValueError
    when Sigma is meaningfully non-PSD.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    diag = np.diag(np.diag(Sigma))
    if np.array_equal(Sigma, diag):
        if np.any(np.diag(Sigma) < 0.0):
            raise ValueError(
                f"covariance has a negative diagonal{' in ' + context if context else ''}"
            )
        return np.sqrt(diag)
    try:
        return np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(symmetrize(Sigma))
    scale = max(abs(w[0]), abs(w[-1]), 1.0)
    if w[0] < -1e-8 * scale:
        raise ValueError(
            f"covariance is not positive semi-definite{' in ' + context if context else ''}: "
            f"min eigenvalue {w[0]:.3e}"
        )
    if context:
        warnings.warn(
            f"Cholesky failed in {context}; using clamped eigendecomposition",
            RuntimeWarning,
            stacklevel=2,
        )
    return V * np.sqrt(np.clip(w, 0.0, None))
