"""Classical random walks on lattices with alternating bond rates.

Builds the tridiagonal rate generators, computes the counting-field winding
invariant, diagonalizes finite open sections, evaluates the analytic
escape-time distribution, samples escape times exactly with reproducible
parallel streams, reconstructs the empirical curves, and fits the exponent
spectrum back out of them.
"""

from .generators import (
    ChainGenerator,
    FeedbackConfig,
    RateConfig,
    SetGenerator,
    SetLeadConfig,
    build_feedback_generator,
    build_local_blocks,
    build_set_generator,
    build_ssh_generator,
    counting_generator,
)
from .topology import GapClosedError, WindingResult, chiral_symmetry_check, winding_number
from .spectral import (
    InversionOperator,
    InversionValidationError,
    SpectralDecomposition,
    build_inversion_operator,
    classify_parity,
    eigendecompose,
    midgap_report,
    tridiagonal_eigh,
)
from .etd import (
    EtdModel,
    etd_coefficients,
    etd_eval,
    integrated_etd_eval,
    moments_and_cumulants,
    ode_oracle,
    site_rho0,
    symmetric_rho0,
)
from .sampling import (
    EscapeTimeEnsemble,
    ReconstructedCurve,
    ks_distance,
    load_ensemble,
    reconstruct_etd,
    reconstruct_integrated_etd,
    sample_ensemble,
    sample_ensemble_from_generator,
    sample_escape_time,
    save_ensemble,
    trajectory_rng,
)
from .fitting import FitResult, fit_exponential_sum, fit_integrated_etd, fit_stability_sweep

__version__ = "0.1.0"

__all__ = [
    "ChainGenerator",
    "EscapeTimeEnsemble",
    "EtdModel",
    "FeedbackConfig",
    "FitResult",
    "GapClosedError",
    "InversionOperator",
    "InversionValidationError",
    "RateConfig",
    "ReconstructedCurve",
    "SetGenerator",
    "SetLeadConfig",
    "SpectralDecomposition",
    "WindingResult",
    "build_feedback_generator",
    "build_inversion_operator",
    "build_local_blocks",
    "build_set_generator",
    "build_ssh_generator",
    "chiral_symmetry_check",
    "classify_parity",
    "counting_generator",
    "eigendecompose",
    "etd_coefficients",
    "etd_eval",
    "fit_exponential_sum",
    "fit_integrated_etd",
    "fit_stability_sweep",
    "integrated_etd_eval",
    "ks_distance",
    "load_ensemble",
    "midgap_report",
    "moments_and_cumulants",
    "ode_oracle",
    "reconstruct_etd",
    "reconstruct_integrated_etd",
    "sample_ensemble",
    "sample_ensemble_from_generator",
    "sample_escape_time",
    "save_ensemble",
    "site_rho0",
    "symmetric_rho0",
    "trajectory_rng",
    "tridiagonal_eigh",
    "winding_number",
]
