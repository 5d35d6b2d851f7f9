"""Order statistics, empirical quantiles and covariance helpers.

Everything here is a pure function of its inputs. Data matrices are plain
``(n, p)`` float arrays with one observation per row.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import (
    DataError,
    EmptyDistributionError,
    InsufficientDataError,
    RankError,
)


def check_data_matrix(X, min_rows: int = 1) -> np.ndarray:
    """Validate ``X`` as a finite 2-D float matrix with at least ``min_rows`` rows."""
    try:
        X = check_array(
            X,
            dtype=np.float64,
            ensure_all_finite=True,
            ensure_min_samples=1,
            ensure_min_features=1,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if X.shape[0] < min_rows:
        raise InsufficientDataError(
            f"need at least {min_rows} rows, got {X.shape[0]}"
        )
    return X


def check_kappa(kappa, p: int) -> int:
    if isinstance(kappa, bool) or int(kappa) != kappa:
        raise RankError(f"kappa must be an integer, got {kappa!r}")
    kappa = int(kappa)
    if not 1 <= kappa <= p:
        raise RankError(f"kappa={kappa} outside 1..{p}")
    return kappa


def kth_largest(v, k: int) -> float:
    """Return the k-th largest entry of ``v`` (``k=1`` is the maximum).

    Ties count with multiplicity, so ``kth_largest([5, 5, 5], 3) == 5``.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    k = check_kappa(k, v.size)
    return float(np.sort(v)[v.size - k])


def kth_largest_rows(V: np.ndarray, k: int) -> np.ndarray:
    """Row-wise :func:`kth_largest` for a 2-D array."""
    V = np.asarray(V, dtype=np.float64)
    p = V.shape[1]
    k = check_kappa(k, p)
    return np.partition(V, p - k, axis=1)[:, p - k]


def empirical_quantile(draws, gamma: float) -> float:
    """Lower empirical quantile ``inf{t : F_B(t) >= gamma}``.

    This is the ``ceil(gamma * B)``-th smallest draw; no interpolation.
    The rank is settled with the same float comparison ``k / B >= gamma``
    that the infimum definition uses, so results agree with a direct scan.
    """
    d = np.sort(np.asarray(draws, dtype=np.float64).ravel())
    B = d.size
    if B == 0:
        raise EmptyDistributionError("empirical distribution has no draws")
    if not 0.0 < gamma < 1.0:
        raise DataError(f"gamma must lie in (0, 1), got {gamma}")
    k = max(1, min(B, math.ceil(gamma * B)))
    while k > 1 and (k - 1) / B >= gamma:
        k -= 1
    while k < B and k / B < gamma:
        k += 1
    return float(d[k - 1])


def center_columns(X) -> np.ndarray:
    """Subtract the column means, so row ``i`` becomes ``X_i - mean(X)``."""
    X = check_data_matrix(X)
    return X - X.mean(axis=0)


def empirical_covariance(X) -> np.ndarray:
    """Empirical covariance with divisor ``n``.

    Note the divisor: this is ``n^-1 sum (X_i - mean)(X_i - mean)^T``, not
    the unbiased ``n - 1`` version that ``np.cov`` returns by default.
    """
    X = check_data_matrix(X, min_rows=2)
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / X.shape[0]
    return (S + S.T) / 2.0


def absolute_embedding(v) -> np.ndarray:
    """Stack ``v`` and ``-v``; the k-th largest of the result is that of ``|v|``."""
    v = np.asarray(v, dtype=np.float64)
    return np.concatenate([v, -v], axis=-1)
