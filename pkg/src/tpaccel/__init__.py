"""Three-point polynomial acceleration of fixed-point iterations."""

from .accelerators import (
    AndersonHistory,
    TpaState,
    aitken_step,
    anderson2_double_blend,
    anderson2_weight,
    anderson_solve,
    error_polynomial,
    error_polynomial_slope,
    optimal_coefficients,
    picard_solve,
    relaxed_solve,
    tpa_blend,
    tpa_solve,
    tpa_weight,
)
from .core import (
    CountedMap,
    DimensionError,
    DivergenceError,
    DomainError,
    FixedPointMapHandle,
    ResidualTrace,
    SingularFitError,
    SolveConfig,
    SolveReport,
    SolverError,
    counted_map,
    residual_inf_norm,
)
from .problems import (
    ProblemInstance,
    build_clustered_linear,
    build_poisson,
    build_problem,
    build_tanh,
)

__version__ = "0.1.0"
