"""klprox: composite optimization solvers with KL-exponent diagnostics.

Model: f(x) = h(x) + P(x), smooth loss plus structured regularizer. The
package bundles the penalty catalog (value / prox / subgradient-distance
oracles), proximal-gradient and constant-step inertial solvers, Moreau
envelopes, and an empirical diagnostics layer that fits KL exponents,
convergence rates, and Luo-Tseng error-bound ratios at desk scale.
"""

from .core import (
    CapabilityError,
    CompositeObjective,
    ConfigurationError,
    DimensionError,
    DomainError,
    DomainEscapeError,
    InsufficientDataError,
    SolverTrace,
    as_matrix,
    as_vector,
)
from .diagnostics import (
    ErrorBoundReport,
    KLFitResult,
    OutOfHypothesisError,
    RateFitResult,
    RuleCheckResult,
    check_composition_rule,
    check_error_bound,
    check_min_rule,
    check_moreau_rule,
    check_potential_rule,
    check_separable_sum_rule,
    fit_kl_exponent_by_sampling,
    fit_kl_exponent_from_trace,
    fit_kl_exponent_of_function,
    fit_linear_rate,
    run_rule_suite,
)
from .envelope import MoreauEnvelope
from .harness import (
    PRESETS,
    ProblemConfig,
    RunReport,
    build_config,
    emit_csv,
    emit_json,
    generate_problem,
    load_report,
    read_trace_csv,
    run_experiment,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .losses import LeastSquares, Logistic, Poisson, SmoothLoss, ZeroLoss, make_loss, operator_norm
from .regularizers import (
    L1,
    MCP,
    SCAD,
    GroupBall,
    L0Ball,
    Regularizer,
    SparseSimplex,
    TrimmedL1,
    Zero,
    project_simplex,
)
from .solvers import IPianoConfig, PGConfig, estimate_stationary_set, run_ipiano, run_pg

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "CompositeObjective",
    "ConfigurationError",
    "DimensionError",
    "DomainError",
    "DomainEscapeError",
    "ErrorBoundReport",
    "GroupBall",
    "IPianoConfig",
    "InsufficientDataError",
    "KERNEL_BACKEND",
    "KLFitResult",
    "L0Ball",
    "L1",
    "LeastSquares",
    "Logistic",
    "MCP",
    "MoreauEnvelope",
    "OutOfHypothesisError",
    "PGConfig",
    "PRESETS",
    "Poisson",
    "ProblemConfig",
    "RateFitResult",
    "Regularizer",
    "RuleCheckResult",
    "RunReport",
    "SCAD",
    "SmoothLoss",
    "SolverTrace",
    "SparseSimplex",
    "TrimmedL1",
    "Zero",
    "ZeroLoss",
    "as_matrix",
    "as_vector",
    "build_config",
    "check_composition_rule",
    "check_error_bound",
    "check_min_rule",
    "check_moreau_rule",
    "check_potential_rule",
    "check_separable_sum_rule",
    "emit_csv",
    "emit_json",
    "estimate_stationary_set",
    "fit_kl_exponent_by_sampling",
    "fit_kl_exponent_from_trace",
    "fit_kl_exponent_of_function",
    "fit_linear_rate",
    "generate_problem",
    "load_report",
    "make_loss",
    "operator_norm",
    "project_simplex",
    "read_trace_csv",
    "run_experiment",
    "run_ipiano",
    "run_pg",
    "run_rule_suite",
]
