"""Bootstrap inference for the k-th largest coordinate of high-dimensional sums."""

from .bootstrap import (
    BootstrapDraws,
    BootstrapSpec,
    PValueReport,
    critical_value,
    empirical_replicate,
    multi_kappa_test,
    multiplier_replicate,
    observed_statistic,
    one_sample_mean_test,
    p_value,
    run_bootstrap,
)
from .estimator import KthLargestMeanTest
from .sampling import CovarianceSpec, ModelSpec, SeedSpec, WeightScheme
from .stats_core import (
    absolute_embedding,
    center_columns,
    empirical_covariance,
    empirical_quantile,
    kth_largest,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapDraws",
    "BootstrapSpec",
    "CovarianceSpec",
    "KthLargestMeanTest",
    "ModelSpec",
    "PValueReport",
    "SeedSpec",
    "WeightScheme",
    "absolute_embedding",
    "center_columns",
    "critical_value",
    "empirical_covariance",
    "empirical_quantile",
    "empirical_replicate",
    "kth_largest",
    "multi_kappa_test",
    "multiplier_replicate",
    "observed_statistic",
    "one_sample_mean_test",
    "p_value",
    "run_bootstrap",
]
