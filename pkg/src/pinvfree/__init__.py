"""Pseudoinverse-free randomized solvers for linear systems.

The library implements a family of row, column, entry, and Gaussian-sketch
iterations (Kaczmarz, Gauss-Seidel, block and sketched variants) under one
update rule with optional heavy-ball momentum, together with closed-form
convergence-rate certificates and Monte-Carlo verification tools. Hot loops
run in a compiled extension when available and fall back to pure Python.
"""

from .core import (
    IterationTrace,
    LinearSystem,
    Metric,
    ReferenceSolutions,
    SolverConfig,
    SpectralInfo,
    compute_spectral_info,
    is_consistent,
    reference_solutions,
    rre,
    rse,
)
from .data import (
    GraphKind,
    GraphTopology,
    RhsMode,
    RhsRecipe,
    gen_conditioned,
    gen_gaussian,
    gen_sparse,
    incidence_system,
    make_rhs,
    read_matrix_market,
    write_matrix_market,
)
from .samplers import (
    SampleRealization,
    SamplerKind,
    SamplerSpec,
    UpdateDirection,
    draw,
    enumerate_support,
    exact_update_operator,
    update_direction,
    validate_spec,
)
from .solver import (
    DivergenceError,
    SolveResult,
    TrialEnsemble,
    available_backends,
    mpfr_step,
    pfr_step,
    run_trials,
    solve,
)
from .theory import (
    BetaKind,
    InadmissibleError,
    RateBound,
    RateReport,
    accelerated_omega_range,
    applicable_bounds,
    beta_closed_form,
    build_report,
    default_stepsize,
    direction_decay,
    expected_iterate_rate,
    momentum_rate,
    momentum_upper_bound,
    omega_upper_bound,
    rate_q,
    residual_envelope,
    sketch_scale,
)
from .verify import (
    check_gaussian_fourth_moment,
    empirical_direction_decay,
    estimate_beta,
    estimate_update_operator,
    realized_operator,
    run_suite,
)

__version__ = "0.1.0"

__all__ = [
    "IterationTrace",
    "LinearSystem",
    "Metric",
    "ReferenceSolutions",
    "SolverConfig",
    "SpectralInfo",
    "compute_spectral_info",
    "is_consistent",
    "reference_solutions",
    "rre",
    "rse",
    "GraphKind",
    "GraphTopology",
    "RhsMode",
    "RhsRecipe",
    "gen_conditioned",
    "gen_gaussian",
    "gen_sparse",
    "incidence_system",
    "make_rhs",
    "read_matrix_market",
    "write_matrix_market",
    "SampleRealization",
    "SamplerKind",
    "SamplerSpec",
    "UpdateDirection",
    "draw",
    "enumerate_support",
    "exact_update_operator",
    "update_direction",
    "validate_spec",
    "DivergenceError",
    "SolveResult",
    "TrialEnsemble",
    "available_backends",
    "mpfr_step",
    "pfr_step",
    "run_trials",
    "solve",
    "BetaKind",
    "InadmissibleError",
    "RateBound",
    "RateReport",
    "accelerated_omega_range",
    "applicable_bounds",
    "beta_closed_form",
    "build_report",
    "default_stepsize",
    "direction_decay",
    "expected_iterate_rate",
    "momentum_rate",
    "momentum_upper_bound",
    "omega_upper_bound",
    "rate_q",
    "residual_envelope",
    "sketch_scale",
    "check_gaussian_fourth_moment",
    "empirical_direction_decay",
    "estimate_beta",
    "estimate_update_operator",
    "realized_operator",
    "run_suite",
    "__version__",
]
