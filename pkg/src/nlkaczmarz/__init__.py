"""Greedy block nonlinear Kaczmarz solvers with heavy-ball momentum."""

from .core import (
    ConfigError,
    EvaluationError,
    FunctionProblem,
    IterationState,
    Method,
    Problem,
    SolveReport,
    SolverConfig,
    dense_row,
    finite_difference_row,
    validate_config,
)
from .problems import (
    BenchmarkSpec,
    LinearSystem,
    make_broyden_tridiagonal,
    make_h_equation,
    make_nondquar,
    make_problem,
    make_singular_broyden,
)
from .selection import compute_delta, compute_eta, select_greedy, select_max_residual
from .solver import (
    DivergenceError,
    StepBreakdown,
    kaczmarz_momentum_step,
    projection_direction,
    solve,
    solve_with_timing,
)

__all__ = [
    "BenchmarkSpec",
    "ConfigError",
    "DivergenceError",
    "EvaluationError",
    "FunctionProblem",
    "IterationState",
    "LinearSystem",
    "Method",
    "Problem",
    "SolveReport",
    "SolverConfig",
    "StepBreakdown",
    "compute_delta",
    "compute_eta",
    "dense_row",
    "finite_difference_row",
    "kaczmarz_momentum_step",
    "make_broyden_tridiagonal",
    "make_h_equation",
    "make_nondquar",
    "make_problem",
    "make_singular_broyden",
    "projection_direction",
    "select_greedy",
    "select_max_residual",
    "solve",
    "solve_with_timing",
    "validate_config",
]

__version__ = "0.1.0"
