"""Nonparametric estimation of the small-jump density of a Levy process.

Estimates the density of the increment of the small-jump part (jumps of
modulus at most a threshold eps) from n discrete observations of the full
process, by spectral cut-off deconvolution of the empirical characteristic
function.  Includes exact samplers for tempered stable processes, adaptive
cutoff selection by penalized contrast, theoretical bias/variance bounds,
and a seeded Monte Carlo harness.
"""

from .estimators import (
    CutoffUndefinedError,
    SpectralEstimate,
    benchmark_density,
    estimate_direct,
    estimate_gaussian_noise,
    estimate_known_noise,
    relative_l2_error,
    sup_norm_bound,
    theoretical_bounds,
)
from .experiments import (
    CutoffMode,
    ExperimentSpec,
    RiskReport,
    rate_study,
    reproduce_table,
    run_monte_carlo,
)
from .models import ProcessConfig, TemperedStableParams, orey_constants
from .sampling import (
    IncrementSample,
    sample_full_increments,
    sample_small_jump_increments,
    sample_stable_increments,
    sample_tempered_stable_increments,
)
from .selection import CutoffGrid, select_cutoff

__version__ = "0.1.0"

__all__ = [
    "CutoffGrid",
    "CutoffMode",
    "CutoffUndefinedError",
    "ExperimentSpec",
    "IncrementSample",
    "ProcessConfig",
    "RiskReport",
    "SpectralEstimate",
    "TemperedStableParams",
    "benchmark_density",
    "estimate_direct",
    "estimate_gaussian_noise",
    "estimate_known_noise",
    "orey_constants",
    "rate_study",
    "relative_l2_error",
    "reproduce_table",
    "run_monte_carlo",
    "sample_full_increments",
    "sample_small_jump_increments",
    "sample_stable_increments",
    "sample_tempered_stable_increments",
    "select_cutoff",
    "sup_norm_bound",
    "theoretical_bounds",
]
