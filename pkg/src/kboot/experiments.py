"""Monte Carlo experiments: p-value uniformity, coverage, and inequality checks.

Randomness is organised by repetition: repetition ``r`` of an experiment
with master seed ``s`` draws its data from ``derive_seed(s, DATA, r)`` and
its bootstrap from ``derive_seed(s, BOOT, r)``. Repetitions are independent
and reassembled in order, so reports do not depend on the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bootstrap import BootstrapSpec, multi_kappa_test
from .exceptions import ConfigError, DomainError
from .sampling import (
    CovarianceSpec,
    ModelSpec,
    SeedSpec,
    WeightScheme,
    cholesky_factor,
    derive_seed,
    sample_gaussian,
    sample_model,
)
from .smooth import CheckResult
from .stats_core import kth_largest_rows

DATA, BOOT, AUX = 0, 1, 2

DESK_SCALE = {"n": 100, "p": 150, "B": 500, "N": 500}
FULL_SCALE = {"n": 100, "p": 150, "B": 1000, "N": 2000}
DEFAULT_KAPPAS = (1, 3, 5, 7, 9, 11)


def _map_ordered(fn, items, n_jobs):
    items = list(items)
    if not n_jobs or n_jobs == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=min(int(n_jobs), len(items))) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# uniformity of p-values
# ----------------------------------------------------------------------------

def ks_uniform(pvals) -> float:
    """Exact ``sup_t |F_N(t) - t|`` for a sample of values in [0, 1]."""
    p = np.asarray(pvals, dtype=np.float64).ravel()
    if p.size == 0:
        raise DomainError("need at least one p-value")
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise DomainError("p-values must lie in [0, 1]")
    p = np.sort(p)
    N = p.size
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - p), np.max(p - (i - 1) / N)))


def qq_pairs(pvals) -> tuple[np.ndarray, np.ndarray]:
    """(theoretical, sample) uniform quantile pairs with plotting positions (i - 0.5)/N."""
    p = np.sort(np.asarray(pvals, dtype=np.float64))
    N = p.size
    return (np.arange(1, N + 1) - 0.5) / N, p


@dataclass
class UniformityConfig:
    model: ModelSpec = field(default_factory=lambda: ModelSpec(
        "normal", CovarianceSpec.ar1(0.2), DESK_SCALE["n"], DESK_SCALE["p"]))
    kappas: tuple = DEFAULT_KAPPAS
    B: int = DESK_SCALE["B"]
    N: int = DESK_SCALE["N"]
    weights: WeightScheme = WeightScheme("gaussian")
    seed: int = 0
    method: str = "multiplier"

    def __post_init__(self):
        self.kappas = tuple(int(k) for k in self.kappas)
        if not self.kappas:
            raise ConfigError("need at least one kappa")
        if self.N < 1 or self.B < 1:
            raise ConfigError("N and B must be positive")
        BootstrapSpec(method=self.method, weights=self.weights, B=self.B, seed=self.seed)

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "kappas": list(self.kappas), "B": self.B,
                "N": self.N, "weights": self.weights.to_dict(), "method": self.method,
                "seed": self.seed}


@dataclass
class ExperimentReport:
    pvalues: dict
    runtime: dict = field(default_factory=dict)

    @property
    def ks(self) -> dict:
        return {k: ks_uniform(v) for k, v in self.pvalues.items()}

    def qq(self) -> list[tuple[int, float, float]]:
        rows = []
        for k, v in self.pvalues.items():
            th, sa = qq_pairs(v)
            rows.extend((k, float(a), float(b)) for a, b in zip(th, sa))
        return rows

    def to_dict(self) -> dict:
        return {"ks": {str(k): v for k, v in self.ks.items()},
                "N": {str(k): int(len(v)) for k, v in self.pvalues.items()}}


def uniformity_pvalues(cfg: UniformityConfig, rep: int, factor=None) -> dict:
    """p-values for every kappa from one simulated dataset under the null."""
    X = sample_model(cfg.model, SeedSpec(derive_seed(cfg.seed, DATA, rep)), factor)
    spec = BootstrapSpec(method=cfg.method, weights=cfg.weights, B=cfg.B,
                         seed=derive_seed(cfg.seed, BOOT, rep))
    reports = multi_kappa_test(X, spec, cfg.kappas)
    return {k: reports[k].p_value for k in cfg.kappas}


def run_uniformity(cfg: UniformityConfig, n_jobs: int | None = None) -> ExperimentReport:
    start = time.perf_counter()
    L = cholesky_factor(cfg.model.cov.to_matrix(cfg.model.p))
    rows = _map_ordered(lambda r: uniformity_pvalues(cfg, r, L), range(cfg.N), n_jobs)
    pvals = {k: np.array([row[k] for row in rows]) for k in cfg.kappas}
    return ExperimentReport(pvalues=pvals,
                            runtime={"seconds": time.perf_counter() - start,
                                     "repetitions": cfg.N})


# ----------------------------------------------------------------------------
# coverage
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageCell:
    n: int
    p: int
    kappa: int
    method: str = "multiplier"
    weights: WeightScheme = WeightScheme("gaussian")

    def key(self) -> str:
        w = f"-{self.weights.kind}" if self.method == "multiplier" else ""
        return f"n={self.n},p={self.p},kappa={self.kappa},method={self.method}{w}"


@dataclass
class CoverageResult:
    cell: CoverageCell
    rejections: np.ndarray
    alpha: float

    @property
    def reps(self) -> int:
        return self.rejections.size

    @property
    def freq(self) -> float:
        return float(self.rejections.mean())

    @property
    def error(self) -> float:
        return abs(self.freq - self.alpha)

    @property
    def se(self) -> float:
        return math.sqrt(self.alpha * (1 - self.alpha) / self.reps)

    def to_dict(self) -> dict:
        c = self.cell
        return {"n": c.n, "p": c.p, "kappa": c.kappa, "method": c.method,
                "weights": c.weights.to_dict() if c.method == "multiplier" else None,
                "reps": self.reps, "rejection_freq": self.freq,
                "abs_error": self.error, "mc_se": self.se}


@dataclass
class CoverageReport:
    results: list
    alpha: float

    def by_key(self) -> dict:
        return {r.cell.key(): r for r in self.results}

    def trend(self, p: int, kappa: int, method: str, weights: str = "gaussian") -> list:
        """Results for one (p, kappa, method) ordered by increasing n."""
        sel = [r for r in self.results
               if r.cell.p == p and r.cell.kappa == kappa and r.cell.method == method
               and (method != "multiplier" or r.cell.weights.kind == weights)]
        return sorted(sel, key=lambda r: r.cell.n)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "cells": [r.to_dict() for r in self.results]}


def non_increasing_within(errors, ses, k: float = 2.0) -> bool:
    """True if each error exceeds its predecessor by at most ``k`` standard
    errors of the difference."""
    return all(e2 <= e1 + k * math.hypot(s1, s2)
               for e1, e2, s1, s2 in zip(errors, errors[1:], ses, ses[1:]))


def coverage_scan(grid, alpha: float = 0.05, reps: int = 1000, seed: int = 0,
                  B: int = 500, model: ModelSpec | None = None,
                  n_jobs: int | None = None) -> CoverageReport:
    """Empirical rejection frequency of the level-``alpha`` test under the null.

    ``model`` supplies the data law (its ``n`` and ``p`` are overridden per
    cell); default is a Gaussian AR(1) with rho 0.5. Datasets depend only
    on ``(seed, n, p, rep)`` so methods in the same (n, p) see the same data.
    """
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    base = model or ModelSpec("normal", CovarianceSpec.ar1(0.5))
    results = []
    for cell in grid:
        m = ModelSpec(base.model, base.cov, cell.n, cell.p, base.df)
        L = cholesky_factor(m.cov.to_matrix(cell.p))
        cell_seed = derive_seed(seed, cell.n, cell.p)

        def one(rep, cell=cell, m=m, L=L, cell_seed=cell_seed):
            X = sample_model(m, SeedSpec(derive_seed(cell_seed, DATA, rep)), L)
            spec = BootstrapSpec(method=cell.method, weights=cell.weights,
                                 kappa=cell.kappa, B=B, alpha=alpha,
                                 seed=derive_seed(cell_seed, BOOT, rep))
            return multi_kappa_test(X, spec, [cell.kappa])[cell.kappa].reject

        rej = np.array(_map_ordered(one, range(reps), n_jobs), dtype=bool)
        results.append(CoverageResult(cell, rej, alpha))
    return CoverageReport(results, alpha)


# ----------------------------------------------------------------------------
# anti-concentration
# ----------------------------------------------------------------------------

@dataclass
class LevyReport:
    kappa: int
    M: int
    estimates: dict
    a_p: float
    abar_p: float
    sigma: float | None

    def bound(self, eps: float) -> float:
        """``4 kappa eps (a_p + 1) / sigma`` (equal variances only)."""
        if self.sigma is None:
            raise ConfigError("the linear bound needs equal variances")
        return 4.0 * self.kappa * eps * (self.a_p + 1.0) / self.sigma

    def to_dict(self) -> dict:
        d = {"kappa": self.kappa, "M": self.M, "a_p": self.a_p, "abar_p": self.abar_p,
             "sigma": self.sigma,
             "estimates": {repr(e): v for e, v in self.estimates.items()}}
        if self.sigma is not None:
            d["bounds"] = {repr(e): self.bound(e) for e in self.estimates}
        return d


def _chunked_rows(cov, p, M, seed, fn, chunk=20_000):
    """Apply ``fn`` to Gaussian draws in chunks; stream ``i`` feeds chunk ``i``."""
    L = cholesky_factor(cov.to_matrix(p))
    out = []
    for i, start in enumerate(range(0, M, chunk)):
        rng = SeedSpec(seed, i).generator()
        Z = rng.standard_normal((min(chunk, M - start), p))
        out.append(fn(Z @ L.T))
    return out


def levy_concentration_estimate(cov: CovarianceSpec, kappa: int, eps_list, M: int,
                                seed: int, p: int | None = None) -> LevyReport:
    """Grid estimate of ``sup_x P(|Y_[k] - x| <= eps)`` for ``Y ~ N(0, cov)``.

    The sup is taken over a grid spanning the sample range with pitch
    ``min(eps_list) / 10`` shared by every eps, so the estimates are
    non-decreasing in eps. Restricting x to a grid can only lower the sup.
    """
    S = cov.to_matrix(p)
    p = S.shape[0]
    eps_list = [float(e) for e in eps_list]
    if not eps_list or min(eps_list) <= 0:
        raise ConfigError("eps values must be positive")
    sd = np.sqrt(np.diag(S))

    def stats_of(Y):
        Yn = Y / sd
        return kth_largest_rows(Y, kappa), Yn.max(axis=1), np.abs(Yn).max(axis=1)

    parts = _chunked_rows(cov, p, M, seed, stats_of)
    yk = np.sort(np.concatenate([a for a, _, _ in parts]))
    a_p = float(np.concatenate([b for _, b, _ in parts]).mean())
    abar_p = float(np.concatenate([c for _, _, c in parts]).mean())

    pitch = min(eps_list) / 10.0
    lo, hi = yk[0], yk[-1]
    grid = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / pitch)) + 1))
    grid = np.append(grid, (lo + hi) / 2)
    est = {}
    for e in eps_list:
        cnt = np.searchsorted(yk, grid + e, side="right") - np.searchsorted(yk, grid - e, side="left")
        est[e] = float(cnt.max() / M)
    equal = np.allclose(sd, sd[0], rtol=1e-12)
    return LevyReport(kappa=kappa, M=M, estimates=est, a_p=a_p, abar_p=abar_p,
                      sigma=float(sd[0]) if equal else None)


def anticoncentration_checks(report: LevyReport, max_spread: float = 0.5) -> list[CheckResult]:
    """Linear bound per eps, plus near-linearity of estimate/eps across the ladder."""
    out = [CheckResult(check=f"levy_bound(kappa={report.kappa},eps={e})", trials=report.M,
                       estimate=v, bound=report.bound(e))
           for e, v in report.estimates.items()]
    ratios = [v / e for e, v in report.estimates.items()]
    out.append(CheckResult(check="levy_linearity", trials=report.M,
                           estimate=max(ratios) / min(ratios) - 1.0, bound=max_spread,
                           detail={"ratios": ratios}))
    return out


# ----------------------------------------------------------------------------
# Gaussian maximal and concentration inequalities
# ----------------------------------------------------------------------------

def gaussian_inequality_check(tau: float, p: int, M: int, seed: int,
                              r_multiples=(0.5, 1.0, 2.0),
                              bound_scale: float = 1.0) -> list[CheckResult]:
    """Maximal inequality ``E max <= tau sqrt(2 ln p)`` and the upper tail
    ``P(max >= E max + r) <= exp(-r^2 / (2 tau^2))`` for i.i.d. N(0, tau^2).

    Each check allows three Monte Carlo standard errors.
    """
    mx = np.concatenate(_chunked_rows(CovarianceSpec.explicit(np.eye(p) * tau**2), p, M,
                                      seed, lambda Y: Y.max(axis=1)))
    mean = float(mx.mean())
    se = float(mx.std(ddof=1) / math.sqrt(M))
    out = [CheckResult(check=f"gaussian_max(p={p},tau={tau})", trials=M, estimate=mean,
                       bound=tau * math.sqrt(2 * math.log(p)) * bound_scale, tol=3 * se,
                       detail={"mc_se": se})]
    for m in r_multiples:
        r = m * tau
        freq = float(np.mean(mx >= mean + r))
        b = math.exp(-r * r / (2 * tau * tau)) * bound_scale
        tail_se = math.sqrt(max(freq * (1 - freq), b * (1 - b)) / M)
        out.append(CheckResult(check=f"gaussian_tail(p={p},r={m}tau)", trials=M,
                               estimate=freq, bound=b, tol=3 * tail_se,
                               detail={"mc_se": tail_se}))
    return out


# ----------------------------------------------------------------------------
# Gaussian-to-Gaussian comparison
# ----------------------------------------------------------------------------

def ks_two_sample_se(m1: int, m2: int) -> float:
    """Conservative Monte Carlo s.e. of a two-sample KS distance: the
    largest pointwise s.d. of a difference of empirical CDFs."""
    return 0.5 * math.sqrt(1.0 / m1 + 1.0 / m2)


@dataclass
class ComparisonReport:
    kappa: int
    M: int
    delta: float
    ks: float

    @property
    def se(self) -> float:
        return ks_two_sample_se(self.M, self.M)

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "M": self.M, "delta": self.delta, "ks": self.ks,
                "mc_se": self.se}


def gaussian_comparison_check(cov1: CovarianceSpec, cov2: CovarianceSpec, kappa: int,
                              M: int, seed: int, p: int | None = None) -> ComparisonReport:
    """Two-sample KS distance between ``Z1_[k]`` and ``Z2_[k]`` from independent streams."""
    S1, S2 = cov1.to_matrix(p), cov2.to_matrix(p)
    if S1.shape != S2.shape:
        raise ConfigError("covariances differ in dimension")
    z1 = kth_largest_rows(sample_gaussian(cov1, M, SeedSpec(seed, 1), p), kappa)
    z2 = kth_largest_rows(sample_gaussian(cov2, M, SeedSpec(seed, 2), p), kappa)
    ks = float(stats.ks_2samp(z1, z2).statistic)
    return ComparisonReport(kappa=kappa, M=M, delta=float(np.max(np.abs(S1 - S2))), ks=ks)


def comparison_ladder(base: CovarianceSpec, p: int, kappa: int, deltas, M: int,
                      seed: int) -> list[ComparisonReport]:
    """KS distance between ``N(0, base + delta I)`` and ``N(0, base)`` for each delta."""
    S = base.to_matrix(p)
    return [gaussian_comparison_check(CovarianceSpec.explicit(S + d * np.eye(p)),
                                      CovarianceSpec.explicit(S), kappa, M,
                                      derive_seed(seed, AUX, i))
            for i, d in enumerate(deltas)]
