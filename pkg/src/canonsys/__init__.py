"""Periodic canonical systems ``J u' = z H(t) u``: integration, monodromy and Floquet theory."""

from .errors import *  # noqa: F401,F403
from .errors import __all__ as _errors_all
from .floquet import (
    DECAYING,
    GROWING,
    PSEUDO_PERIODIC,
    TOL_CIRCLE,
    FloquetFactorization,
    FloquetReport,
    FloquetSolution,
    MonodromyAnalysis,
    MultiplierRecord,
    SolutionClassification,
    classify,
    classify_multiplier,
    floquet_factorize,
    floquet_solution,
    full_analysis,
    fundamental_two_periods,
    monodromy,
    period_norm_ratios,
    reduce_to_constant,
    translation_identity_check,
)
from .integrate import (
    DEFAULT_SCHEME,
    DEFAULT_STEPS_PER_PERIOD,
    SCHEMES,
    FundamentalSolution,
    VectorSolution,
    basis_solutions,
    integrate_fundamental,
    integrate_vector,
    period_grid,
    picard_solve,
    step_propagators,
    uniform_grid,
)
from .mathcore import (
    StructureReport,
    matrix_exp,
    matrix_log,
    principal_log,
    standard_J,
    structure_check,
    symplectic_residual,
)
from .system import (
    CanonicalSystem,
    ConstantCoefficient,
    FourierCoefficient,
    HamiltonianCoefficient,
    LinearSystem,
    PiecewiseConstantCoefficient,
    SampledCoefficient,
    TimeReparametrization,
    is_trace_normed,
    make_system,
    sample_H,
    trace_normalize,
    validate_coefficient,
)

__version__ = "0.1.0"
