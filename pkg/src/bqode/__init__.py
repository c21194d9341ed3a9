"""Probabilistic ODE solvers built on Gaussian filtering.

The solution of an initial value problem is inferred by Kalman filtering
over an integrated-Wiener-process prior, with the gradient observation
produced by a pluggable measurement scheme (maximum likelihood, Monte
Carlo integration, Taylor linearization, or Bayesian quadrature).  A
perturbation-sampling solver and a benchmark CLI sit alongside.
"""

from .bayes_quad import (
    QuadratureRule,
    SEKernel,
    build_rule,
    double_integral,
    grid_nodes,
    hermite_nodes,
    kernel_mean,
)
from .errors import (
    DivergenceError,
    DynamicsError,
    QuadratureConditioningError,
    SingularInnovationError,
    SolverError,
)
from .gauss_filter import (
    GaussianState,
    Measurement,
    ObservationOperator,
    SolutionTrajectory,
    initial_state,
    predict,
    solve,
    update,
)
from .measurements import (
    BayesianQuadrature,
    MaxLikelihood,
    MeasurementGenerator,
    MonteCarloIntegration,
    TaylorLinearization,
    measure_bq,
    measure_mc,
    measure_ml,
    measure_taylor,
)
from .perturb_sampler import (
    EmpiricalMeasure,
    PerturbedSolverConfig,
    empirical_measure,
    sample_path,
)
from .problems import (
    PROBLEMS,
    IVProblem,
    Reference,
    error_at,
    linear_problem,
    problem_by_name,
    reference_solve,
    vdp_problem,
)
from .state_model import (
    IWPModel,
    TransitionPair,
    process_noise,
    transition_matrix,
    transition_pair,
)

__version__ = "0.1.0"

__all__ = [
    "IWPModel",
    "TransitionPair",
    "transition_matrix",
    "process_noise",
    "transition_pair",
    "GaussianState",
    "Measurement",
    "ObservationOperator",
    "SolutionTrajectory",
    "predict",
    "update",
    "initial_state",
    "solve",
    "MeasurementGenerator",
    "MaxLikelihood",
    "MonteCarloIntegration",
    "TaylorLinearization",
    "BayesianQuadrature",
    "measure_ml",
    "measure_mc",
    "measure_taylor",
    "measure_bq",
    "SEKernel",
    "QuadratureRule",
    "kernel_mean",
    "double_integral",
    "grid_nodes",
    "hermite_nodes",
    "build_rule",
    "PerturbedSolverConfig",
    "EmpiricalMeasure",
    "sample_path",
    "empirical_measure",
    "IVProblem",
    "Reference",
    "vdp_problem",
    "linear_problem",
    "problem_by_name",
    "PROBLEMS",
    "reference_solve",
    "error_at",
    "SolverError",
    "DynamicsError",
    "SingularInnovationError",
    "DivergenceError",
    "QuadratureConditioningError",
    "__version__",
]
