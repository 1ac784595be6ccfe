"""our-pd-approx -- finite-rank purely deterministic approximation of stationary processes.

Toeplitz truncations of a covariance sequence, their optimal rank-n
principal-component approximations, orthogonal state-space extensions of
those approximations, and weak-convergence and Monte Carlo checks, with a
``pd-approx`` command line on top.
"""

from .converge import WeakConvergenceReport, convergence_sweep, psi_bank, wconv_report, weak_gap
from .errors import (
    AccuracyError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    LengthError,
    ParseError,
    PDApproxError,
    RealizationError,
    ValidationError,
)
from .model import CovarianceSequence, QuadratureSpec, Symbol, covariance_from_symbol, load_covariance, load_symbol
from .pca import RankNApproximation, approximation_error_of, optimal_approximator, projection_certificate
from .realize import LineSpectrum, StateSpaceRealization, extend_covariance, line_spectrum, stationary_extension
from .sample import PathBatch, mc_orthogonality, mc_weak_error, sample_paths
from .spectrum import SpectrumResult, effective_rank, eigendecompose, weyl_track
from .toeplitz import TestFunction, ToeplitzTruncation, quadratic_form, truncate

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "ConfigError",
    "ConvergenceError",
    "CovarianceSequence",
    "DimensionError",
    "LengthError",
    "LineSpectrum",
    "PDApproxError",
    "ParseError",
    "PathBatch",
    "QuadratureSpec",
    "RankNApproximation",
    "RealizationError",
    "SpectrumResult",
    "StateSpaceRealization",
    "Symbol",
    "TestFunction",
    "ToeplitzTruncation",
    "ValidationError",
    "WeakConvergenceReport",
    "approximation_error_of",
    "convergence_sweep",
    "covariance_from_symbol",
    "effective_rank",
    "eigendecompose",
    "extend_covariance",
    "line_spectrum",
    "load_covariance",
    "load_symbol",
    "mc_orthogonality",
    "mc_weak_error",
    "optimal_approximator",
    "projection_certificate",
    "psi_bank",
    "quadratic_form",
    "sample_paths",
    "stationary_extension",
    "truncate",
    "wconv_report",
    "weak_gap",
    "weyl_track",
]
