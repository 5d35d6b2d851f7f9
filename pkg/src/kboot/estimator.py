"""scikit-learn style front end for the bootstrap test."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bootstrap import BootstrapSpec, observed_statistic, run_bootstrap, _report
from .sampling import WeightScheme
from .stats_core import check_data_matrix


class KthLargestMeanTest(BaseEstimator):
    """One-sample mean test based on the k-th largest scaled coordinate sum.

    Parameters
    ----------
    kappa : int, default=1
        Order of the coordinate statistic (1 is the maximum).
    method : {"multiplier", "empirical", "gaussian_analog"}, default="multiplier"
    weights : {"gaussian", "rademacher", "mammen", "std_beta"}, default="gaussian"
        Multiplier weight law; ignored by the other methods.
    n_bootstrap : int, default=1000
    alpha : float, default=0.05
    sided : {"upper", "two_sided"}, default="upper"
        ``two_sided`` uses the absolute coordinate sums.
    random_state : int, default=0
        Master seed. Replicate ``r`` uses stream ``r`` of this seed.
    n_jobs : int or None, default=None
        Worker threads for the replicate loop. Results do not depend on it.

    Attributes
    ----------
    statistic_ : float
    bootstrap_draws_ : ndarray of shape (n_bootstrap,)
    p_value_ : float
    critical_value_ : float
    reject_ : bool
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> X = np.random.default_rng(0).standard_normal((50, 20)) + 1.0
    >>> KthLargestMeanTest(kappa=3, n_bootstrap=200).fit(X).reject_
    True
    """

    def __init__(self, kappa=1, method="multiplier", weights="gaussian",
                 n_bootstrap=1000, alpha=0.05, sided="upper", random_state=0,
                 n_jobs=None):
        self.kappa = kappa
        self.method = method
        self.weights = weights
        self.n_bootstrap = n_bootstrap
        self.alpha = alpha
        self.sided = sided
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _spec(self) -> BootstrapSpec:
        return BootstrapSpec(method=self.method, weights=WeightScheme(self.weights),
                             kappa=self.kappa, B=self.n_bootstrap, alpha=self.alpha,
                             sided=self.sided, seed=self.random_state)

    def fit(self, X, y=None):
        spec = self._spec()
        X = check_data_matrix(X)
        self.n_features_in_ = X.shape[1]
        T = observed_statistic(X, spec.kappa, spec.sided)
        draws = run_bootstrap(X, spec, n_jobs=self.n_jobs)
        self.report_ = _report(T, draws, spec)
        self.statistic_ = self.report_.statistic
        self.bootstrap_draws_ = draws.values
        self.p_value_ = self.report_.p_value
        self.critical_value_ = self.report_.critical_value
        self.reject_ = self.report_.reject
        return self

    def p_value_for(self, statistic) -> np.ndarray:
        """Bootstrap p-values for other statistic values, against the fitted draws."""
        check_is_fitted(self, "bootstrap_draws_")
        t = np.atleast_1d(np.asarray(statistic, dtype=np.float64))
        d = np.sort(self.bootstrap_draws_)
        return (d.size - np.searchsorted(d, t, side="left")) / d.size
