"""Fundamental solutions of nonlocal Schrödinger operators L_K + V on uniform grids."""

__version__ = "0.1.0"

from .errors import (
    AssemblyError,
    ConfigurationError,
    DomainError,
    NonConvergence,
    NumericFailure,
    StageFailure,
)
from .kernel import (
    FractionalOrder,
    Kernel,
    Potential,
    QuadratureParams,
    kernel_eval,
    multiplier,
    near_mass_second_moment,
    normalization_constant,
    tail_mass,
)
from .discretization import (
    AssembledOperator,
    DiscreteField,
    Grid,
    apply_LK,
    assemble,
    build_grid,
    sample_potential,
)
from .variational import (
    NormReport,
    embedding_ratio,
    energy,
    hdot_s_identity_check,
    norm_report,
    wgamma_p_seminorm,
    xs0_inner,
)
from .solver import (
    SolveConfig,
    SolveReport,
    check_comparison,
    check_maximum_principle,
    plancherel_crosscheck,
    verify_weak_formulation,
    weak_solve,
)
from .fundamental import (
    DiagnosticParams,
    ExhaustionSchedule,
    FundamentalReport,
    Mollifier,
    fit_decay,
    lemma58_diagnostics,
    run_exhaustion,
    sample_mollifier,
)
