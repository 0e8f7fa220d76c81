"""Score-driven (DCS / GAS) models of order (1,1)."""

from .densities import information_matrix, log_density, log_density_and_score, scaling_matrix, score
from .estimation import default_init, extract_moments, fit_mle
from .filtering import filter_series, loglik
from .simulate import simulate_dcs, simulate_egarch, skewt_moments, skewt_rvs
from .types import (
    MIN_FIT_LENGTH,
    DcsParams,
    DcsSpec,
    EgarchDgpParams,
    Family,
    FittedDcs,
    MomentPaths,
    ReturnSeries,
)

__all__ = [
    "MIN_FIT_LENGTH",
    "DcsParams",
    "DcsSpec",
    "EgarchDgpParams",
    "Family",
    "FittedDcs",
    "MomentPaths",
    "ReturnSeries",
    "default_init",
    "extract_moments",
    "filter_series",
    "fit_mle",
    "information_matrix",
    "log_density",
    "log_density_and_score",
    "loglik",
    "scaling_matrix",
    "score",
    "simulate_dcs",
    "simulate_egarch",
    "skewt_moments",
    "skewt_rvs",
]
