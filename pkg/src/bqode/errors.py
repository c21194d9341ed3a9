"""Exception types shared across the solver stack."""


class SolverError(Exception):
    """Base class for all solver failures."""


class DynamicsError(SolverError):
    """The dynamics callable returned a non-finite value."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (at t={t!r})")
        self.t = t


class SingularInnovationError(SolverError):
    """The innovation variance collapsed to zero or below during an update."""

    def __init__(self, t: float):
        super().__init__(f"singular innovation variance at t={t!r}")
        self.t = t


class DivergenceError(SolverError):
    """A trajectory left the finite floating-point range."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (at t={t!r})")
        self.t = t


class QuadratureConditioningError(SolverError):
    """The quadrature kernel matrix stayed unsolvable after jitter escalation."""

    def __init__(self, n_nodes: int, node_spread: float):
        super().__init__(
            f"kernel matrix for {n_nodes} nodes (spread {node_spread:.3g}) "
            "is numerically singular even after jitter escalation"
        )
        self.n_nodes = n_nodes
        self.node_spread = node_spread
