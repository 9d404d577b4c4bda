"""Numerical verification of the sharp fractional Hardy inequality on the half-space."""

from .specfun import FracParams, beta, duplication_residual, log_gamma, stable_normalizer
from .closedform import (
    ConstantsReport,
    PowerExponent,
    best_constant_killed,
    combined_identity_residual,
    constants_report,
    gamma_general,
    gamma_half,
    kappa,
    killing_coefficient,
)
from .quad import (
    QuadratureError,
    QuadResult,
    SingularitySpec,
    gamma_by_quadrature,
    integrate,
    killing_integral_1d,
    pv_laplacian_power,
    tail_kernel_integral,
)
from .energy import (
    GridFunction,
    HardyMarginReport,
    dpf_residual,
    energy_direct,
    ground_state_energy,
    hardy_margin,
    random_test_function,
    weighted_norm,
)
from .extremal import (
    CutoffSpec,
    ExtremalFunction,
    RayleighReport,
    build_cutoff,
    check_scan,
    convergence_scan,
    extremal_function,
    lower_bound_norm,
    rayleigh_report,
)

__version__ = "0.1.0"
