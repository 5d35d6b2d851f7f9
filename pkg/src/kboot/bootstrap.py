"""Bootstrap inference for the k-th largest coordinate of a scaled sum.

The statistic is ``T = x_[k]`` for ``x = n^{-1/2} sum_i X_i``. Its null law
is approximated by one of three replicate schemes:

``multiplier``
    ``n^{-1/2} sum_i e_i (X_i - mean)`` with i.i.d. weights ``e_i``.
``empirical``
    ``n^{-1/2} sum_i (X*_i - mean)`` with rows resampled uniformly.
``gaussian_analog``
    a draw from ``N(0, S_n)``, ``S_n`` the empirical covariance (divisor n).

Replicate ``r`` draws its randomness from stream ``r`` of the master seed,
and replicates are evaluated in fixed blocks of :data:`BLOCK_SIZE`, so the
draws are bit-identical for any number of worker threads.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import ConfigError, ShapeError
from .sampling import SeedSpec, WeightScheme, cholesky_factor, draw_weights
from .stats_core import (
    absolute_embedding,
    check_data_matrix,
    check_kappa,
    empirical_covariance,
    empirical_quantile,
    kth_largest,
    kth_largest_rows,
)

BLOCK_SIZE = 128
METHODS = ("multiplier", "empirical", "gaussian_analog")
SIDES = ("upper", "two_sided")


def default_workers() -> int:
    """Worker count from ``KBOOT_THREADS``, else the available CPUs."""
    env = os.environ.get("KBOOT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"KBOOT_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"KBOOT_THREADS must be >= 1, got {n}")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass(frozen=True)
class BootstrapSpec:
    method: Literal["multiplier", "empirical", "gaussian_analog"] = "multiplier"
    weights: WeightScheme = WeightScheme()
    kappa: int = 1
    B: int = 1000
    alpha: float = 0.05
    sided: Literal["upper", "two_sided"] = "upper"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sided not in SIDES:
            raise ConfigError(f"sided must be one of {SIDES}, got {self.sided!r}")
        if isinstance(self.B, bool) or int(self.B) != self.B or self.B < 1:
            raise ConfigError(f"B must be a positive integer, got {self.B!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if isinstance(self.kappa, bool) or int(self.kappa) != self.kappa or self.kappa < 1:
            raise ConfigError(f"kappa must be a positive integer, got {self.kappa!r}")
        SeedSpec(self.seed)

    def effective_dim(self, p: int) -> int:
        return 2 * p if self.sided == "two_sided" else p

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "weights": self.weights.to_dict() if self.method == "multiplier" else None,
            "kappa": self.kappa,
            "B": self.B,
            "alpha": self.alpha,
            "sided": self.sided,
            "seed": self.seed,
        }


@dataclass
class BootstrapDraws:
    values: np.ndarray
    spec: BootstrapSpec
    data_digest: str

    def __len__(self):
        return self.values.size


@dataclass
class PValueReport:
    statistic: float
    p_value: float
    critical_value: float
    reject: bool
    spec: BootstrapSpec
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.spec.to_dict()
        d.update(statistic=self.statistic, p_value=self.p_value,
                 critical_value=self.critical_value, reject=self.reject)
        d.update(self.extra)
        return d


def data_digest(X: np.ndarray) -> str:
    X = np.ascontiguousarray(X, dtype=np.float64)
    h = hashlib.sha256()
    h.update(np.asarray(X.shape, dtype=np.int64).tobytes())
    h.update(X.tobytes())
    return h.hexdigest()


def _embed(V, sided):
    return absolute_embedding(V) if sided == "two_sided" else V


def _check_sided(sided):
    if sided not in SIDES:
        raise ConfigError(f"sided must be one of {SIDES}, got {sided!r}")


def observed_statistic(X, kappa: int, sided: str = "upper") -> float:
    """``T``: k-th largest of the scaled column sums of the (uncentred) data."""
    _check_sided(sided)
    X = check_data_matrix(X)
    v = X.sum(axis=0) / math.sqrt(X.shape[0])
    return kth_largest(_embed(v, sided), kappa)


def multiplier_replicate(Xc, e, kappa: int, sided: str = "upper") -> float:
    """One multiplier replicate ``x_[k]`` of ``n^{-1/2} sum_i e_i Xc_i``."""
    _check_sided(sided)
    Xc = check_data_matrix(Xc)
    e = np.asarray(e, dtype=np.float64).ravel()
    if e.size != Xc.shape[0]:
        raise ShapeError(f"weight vector has length {e.size}, expected n={Xc.shape[0]}")
    v = (e @ Xc) / math.sqrt(Xc.shape[0])
    return kth_largest(_embed(v, sided), kappa)


def empirical_replicate(Xc, idx, kappa: int, sided: str = "upper") -> float:
    """One empirical-bootstrap replicate from rows ``Xc[idx]``.

    ``idx`` holds 0-based row indices.
    """
    _check_sided(sided)
    Xc = check_data_matrix(Xc)
    n = Xc.shape[0]
    idx = np.asarray(idx).ravel()
    if idx.size != n:
        raise ShapeError(f"index vector has length {idx.size}, expected n={n}")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ShapeError(f"resampling indices must lie in [0, {n})")
    v = Xc[idx].sum(axis=0) / math.sqrt(n)
    return kth_largest(_embed(v, sided), kappa)


# ----------------------------------------------------------------------------
# replicate generation
# ----------------------------------------------------------------------------

class _ReplicateSource:
    """Builds blocks of replicate vectors (before the order statistic)."""

    def __init__(self, X: np.ndarray, spec: BootstrapSpec):
        self.spec = spec
        self.n, self.p = X.shape
        self.root_n = math.sqrt(self.n)
        self.Xc = X - X.mean(axis=0)
        if spec.method == "gaussian_analog":
            self.L = cholesky_factor(empirical_covariance(X))

    def block(self, start: int, stop: int) -> np.ndarray:
        spec, n = self.spec, self.n
        streams = [SeedSpec(spec.seed, r).generator() for r in range(start, stop)]
        if spec.method == "multiplier":
            W = np.stack([draw_weights(spec.weights, n, g) for g in streams])
            V = (W @ self.Xc) / self.root_n
        elif spec.method == "empirical":
            C = np.stack([np.bincount(g.integers(0, n, size=n), minlength=n)
                          for g in streams]).astype(np.float64)
            V = (C @ self.Xc) / self.root_n
        else:
            Z = np.stack([g.standard_normal(self.p) for g in streams])
            V = Z @ self.L.T
        return _embed(V, spec.sided)


def _blocks(B: int):
    return [(s, min(s + BLOCK_SIZE, B)) for s in range(0, B, BLOCK_SIZE)]


def _run_blocks(fn, B: int, n_jobs: int | None):
    blocks = _blocks(B)
    workers = 1 if n_jobs is None else int(n_jobs)
    if workers < 1:
        raise ConfigError(f"n_jobs must be >= 1, got {n_jobs}")
    if workers == 1 or len(blocks) == 1:
        return [fn(s, e) for s, e in blocks]
    with ThreadPoolExecutor(max_workers=min(workers, len(blocks))) as pool:
        return list(pool.map(lambda se: fn(*se), blocks))


def bootstrap_kth_draws(X, spec: BootstrapSpec, kappas, n_jobs: int | None = None) -> dict:
    """Replicate statistics for several orders ``kappas`` from shared replicates.

    Returns ``{kappa: array of B draws}``. Each replicate vector is built
    once and all requested order statistics are read off it.
    """
    X = check_data_matrix(X, min_rows=2 if spec.method == "gaussian_analog" else 1)
    dim = spec.effective_dim(X.shape[1])
    kappas = [check_kappa(k, dim) for k in kappas]
    src = _ReplicateSource(X, spec)

    def work(start, stop):
        V = src.block(start, stop)
        return [kth_largest_rows(V, k) for k in kappas]

    parts = _run_blocks(work, spec.B, n_jobs)
    return {k: np.concatenate([part[i] for part in parts]) for i, k in enumerate(kappas)}


def run_bootstrap(X, spec: BootstrapSpec, n_jobs: int | None = None) -> BootstrapDraws:
    X = check_data_matrix(X)
    draws = bootstrap_kth_draws(X, spec, [spec.kappa], n_jobs=n_jobs)[spec.kappa]
    return BootstrapDraws(values=draws, spec=spec, data_digest=data_digest(X))


def _values(draws) -> np.ndarray:
    return draws.values if isinstance(draws, BootstrapDraws) else np.asarray(draws, dtype=np.float64)


def p_value(T: float, draws) -> float:
    """Fraction of draws ``>= T`` (inclusive)."""
    v = _values(draws)
    if v.size == 0:
        raise ConfigError("p-value needs at least one draw")
    return int(np.count_nonzero(v >= T)) / v.size


def critical_value(draws, alpha: float) -> float:
    """``(1 - alpha)`` empirical quantile of the draws."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return empirical_quantile(_values(draws), 1.0 - alpha)


def _report(T, draws, spec) -> PValueReport:
    c = critical_value(draws, spec.alpha)
    return PValueReport(statistic=float(T), p_value=p_value(T, draws),
                        critical_value=c, reject=bool(T > c), spec=spec)


def one_sample_mean_test(X, spec: BootstrapSpec, mu0=None,
                         n_jobs: int | None = None) -> PValueReport:
    """Test ``H0: mean(X) = mu0`` (default 0) with the k-th largest statistic.

    ``mu0`` is subtracted from every row before anything else, so the
    statistic is formed from ``X_i - mu0``.
    """
    X = check_data_matrix(X)
    if mu0 is not None:
        mu0 = np.broadcast_to(np.asarray(mu0, dtype=np.float64), (X.shape[1],))
        X = X - mu0
    T = observed_statistic(X, spec.kappa, spec.sided)
    draws = run_bootstrap(X, spec, n_jobs=n_jobs)
    return _report(T, draws, spec)


def multi_kappa_test(X, spec: BootstrapSpec, kappas, n_jobs: int | None = None) -> dict:
    """Reports for several orders at once, sharing the bootstrap replicates.

    ``spec.kappa`` is ignored; each report carries its own ``kappa``.
    """
    X = check_data_matrix(X)
    dim = spec.effective_dim(X.shape[1])
    all_draws = bootstrap_kth_draws(X, spec, kappas, n_jobs=n_jobs)
    v = X.sum(axis=0) / math.sqrt(X.shape[0])
    v = _embed(v, spec.sided)
    out = {}
    for k, d in all_draws.items():
        s = BootstrapSpec(method=spec.method, weights=spec.weights, kappa=k, B=spec.B,
                          alpha=spec.alpha, sided=spec.sided, seed=spec.seed)
        out[k] = _report(kth_largest(v, check_kappa(k, dim)), d, s)
    return out
