"""EM for over-specified two-component Gaussian mixtures.

A library plus experiment harness covering the symmetric isotropic fit and its
tied-diagonal and free-covariance relaxations: closed-form EM updates,
population-level operators evaluated by quadrature, contraction and
perturbation diagnostics, distance oracles, and seeded Monte-Carlo rate
experiments.
"""

from .em import (
    EmTrajectory,
    StopRule,
    default_init,
    default_stop_rule,
    em_step_free,
    em_step_isotropic,
    em_step_tied_diagonal,
    q_function,
    run_em,
)
from .errors import (
    ArgumentError,
    ComponentCollapseError,
    DomainError,
    EmIterationError,
    NumericalError,
)
from .model import (
    SIGMA2_FLOOR,
    DataSet,
    FreeCovParams,
    IsoParams,
    RngSpec,
    TiedDiagParams,
    mixture_log_density,
    population_log_likelihood_1d,
    sample_log_likelihood,
    sample_standard_normal,
    weight,
)
from .population import (
    OperatorEval,
    PerturbationTable,
    contraction_ratio,
    corrected_pop_operator,
    perturbation_scan,
    pseudo_pop_operator,
    pseudo_pop_operator_mc,
    sample_em_location,
    surrogate_sequence,
)
from .quadrature import QuadratureSpec
from .stats import (
    MinimaxPair,
    RateFit,
    SurfaceScan,
    UnivariateMixture,
    hellinger_distance,
    hellinger_exponent_fit,
    likelihood_surface_scan,
    location_error,
    minimax_pair,
    rate_fit,
    squared_hellinger,
    total_variation,
)
from .theory import (
    EpochSchedule,
    RecursionKind,
    corrected_operator_taylor_coeffs,
    epoch_schedule,
    gaussian_even_moments,
    localization_recursion,
    moment_concentration_check,
    one_step_bound_check,
    operator_series_coeffs,
    pde_residual,
    tanh_poly_bounds,
)

__version__ = "0.1.0"
