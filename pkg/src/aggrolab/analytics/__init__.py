"""Second-order theory, asymptotic constants, limit-process evaluation,
empirical diagnostics and regime classification."""

from .estimators import TailIndex, empirical_var_points, panel_cov, partial_sum_slope, sample_cov, tail_index
from .limits import cross_moment, intermediate_cf, kernel, limit_process_cov
from .regimes import RegimeReport, classify_memory, classify_region, diagnose
from .secondorder import (
    asymptotic_constants,
    betatype_cov,
    covariance_from_spectrum,
    partial_sum_variance,
    spectral_density,
    spectral_tail_integral,
    theoretical_cov,
    theoretical_var_points,
)

__all__ = [
    "TailIndex",
    "empirical_var_points",
    "panel_cov",
    "partial_sum_slope",
    "sample_cov",
    "tail_index",
    "cross_moment",
    "intermediate_cf",
    "kernel",
    "limit_process_cov",
    "RegimeReport",
    "classify_memory",
    "classify_region",
    "diagnose",
    "asymptotic_constants",
    "betatype_cov",
    "covariance_from_spectrum",
    "partial_sum_variance",
    "spectral_density",
    "spectral_tail_integral",
    "theoretical_cov",
    "theoretical_var_points",
]
