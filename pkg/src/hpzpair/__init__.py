"""Markovian open-system dynamics of two coupled oscillators in a common
Lorentz-Drude bath, with Gaussian-state information measures."""

__version__ = "0.1.0"

from .coefficients import (  # noqa: E402
    MarkovCoefficients,
    PhysicalParams,
    RegimeTag,
    StabilityReport,
    check_stability,
    coefficients,
)
from .covariance import Covariance4, Frame, cmr_to_lab, lab_to_cmr  # noqa: E402
from .gaussian import (  # noqa: E402
    InfoReport,
    SymplecticSpectrum,
    entropy_sub,
    entropy_total,
    epr_initial,
    info_report,
    log_negativity,
    mutual_information,
    partial_transpose,
    positivity_check,
    purity,
    symplectic_eigenvalues,
)
from .propagator import MarkovPropagator, evolve_covariance  # noqa: E402
from .special import digamma, k_function, solve_cubic  # noqa: E402

__all__ = [
    "Covariance4",
    "Frame",
    "InfoReport",
    "MarkovCoefficients",
    "MarkovPropagator",
    "PhysicalParams",
    "RegimeTag",
    "StabilityReport",
    "SymplecticSpectrum",
    "check_stability",
    "cmr_to_lab",
    "coefficients",
    "digamma",
    "entropy_sub",
    "entropy_total",
    "epr_initial",
    "evolve_covariance",
    "info_report",
    "k_function",
    "lab_to_cmr",
    "log_negativity",
    "mutual_information",
    "partial_transpose",
    "positivity_check",
    "purity",
    "solve_cubic",
    "symplectic_eigenvalues",
]
