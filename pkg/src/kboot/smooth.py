"""Smooth approximation of the k-th largest coordinate.

For a k-subset ``A`` of coordinates let

    g_A(x) = (ln k - logsumexp(-beta * x[A])) / beta

which is a soft minimum over ``A`` shifted by ``ln k / beta``. The smooth
k-max is the soft maximum of ``g_A`` over all k-subsets,

    F(x) = logsumexp_A(beta * g_A(x)) / beta,

and satisfies ``0 <= F(x) - x_[k] <= (ln k + ln C(p, k)) / beta``.

This is an analysis device. It enumerates every k-subset, so it is capped
at :data:`MAX_SUBSETS`; the bootstrap code never calls it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import CapacityError, ConfigError
from .stats_core import check_kappa, kth_largest

MAX_SUBSETS = 2_000_000


@dataclass(frozen=True)
class SmoothParams:
    """Smoothing level ``beta`` and order ``kappa`` in dimension ``p``."""

    beta: float
    kappa: int
    p: int

    def __post_init__(self):
        if not self.beta > 0 or not math.isfinite(self.beta):
            raise ConfigError(f"beta must be positive and finite, got {self.beta}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        check_kappa(self.kappa, self.p)
        if self.kappa > (self.p + 1) // 2:
            raise ConfigError(
                f"kappa={self.kappa} exceeds floor((p+1)/2)={(self.p + 1) // 2}"
            )
        if math.comb(self.p, self.kappa) > MAX_SUBSETS:
            raise CapacityError(
                f"C({self.p}, {self.kappa}) = {math.comb(self.p, self.kappa)} "
                f"subsets exceeds the cap of {MAX_SUBSETS}"
            )

    @property
    def n_subsets(self) -> int:
        return math.comb(self.p, self.kappa)

    @property
    def gap_bound(self) -> float:
        """Upper bound ``(ln k + ln C(p, k)) / beta`` on ``F - x_[k]``."""
        return (math.log(self.kappa) + math.log(self.n_subsets)) / self.beta


def subset_family(p: int, kappa: int) -> np.ndarray:
    """All ``kappa``-subsets of ``range(p)`` in colexicographic order.

    Returned as an ``(C(p, kappa), kappa)`` int array, each row increasing.
    """
    if math.comb(p, kappa) > MAX_SUBSETS:
        raise CapacityError(f"C({p}, {kappa}) exceeds the cap of {MAX_SUBSETS}")
    # colex order of subsets of range(p) == lex order of reversed complements;
    # reflecting i -> p-1-i and reversing each lex tuple gives it directly.
    combos = itertools.combinations(range(p - 1, -1, -1), kappa)
    rows = [tuple(reversed(c)) for c in combos]
    rows.reverse()
    return np.array(rows, dtype=np.intp).reshape(-1, kappa)


def _subsets(params: SmoothParams) -> np.ndarray:
    return _subset_cache(params.p, params.kappa)


_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _subset_cache(p, kappa):
    key = (p, kappa)
    if key not in _CACHE:
        _CACHE[key] = subset_family(p, kappa)
    return _CACHE[key]


def _check_x(x, params):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != params.p:
        raise ConfigError(f"x has length {x.size}, expected p={params.p}")
    return x


def g_subset(x, A, params: SmoothParams) -> float:
    """Shifted soft minimum of ``x`` over the index set ``A`` (0-based)."""
    x = _check_x(x, params)
    A = np.asarray(A, dtype=np.intp).ravel()
    if A.size == 0:
        raise ConfigError("subset must be nonempty")
    b = params.beta
    return float((math.log(params.kappa) - logsumexp(-b * x[A])) / b)


def _subset_values(x, params):
    b = params.beta
    S = _subsets(params)
    return (math.log(params.kappa) - logsumexp(-b * x[S], axis=1)) / b


def smooth_kmax(x, params: SmoothParams) -> float:
    x = _check_x(x, params)
    g = _subset_values(x, params)
    return float(logsumexp(params.beta * g) / params.beta)


def smooth_kmax_grad(x, params: SmoothParams) -> np.ndarray:
    """Analytic gradient of :func:`smooth_kmax`.

    Each subset gets softmax weight ``exp(beta g_A) / sum_A' exp(beta g_A')``
    and spreads it over its members in proportion to ``exp(-beta x_j)``.
    Entries are nonnegative and sum to one.
    """
    x = _check_x(x, params)
    b = params.beta
    S = _subsets(params)
    neg = -b * x[S]
    inner = np.exp(neg - logsumexp(neg, axis=1, keepdims=True))
    g = (math.log(params.kappa) - logsumexp(neg, axis=1)) / b
    w = np.exp(b * g - logsumexp(b * g))
    return np.bincount(S.ravel(), weights=(w[:, None] * inner).ravel(),
                       minlength=params.p)


@dataclass
class CheckResult:
    """Outcome of one numerical inequality check.

    ``slack`` is ``bound - estimate``; a check fails when the slack is
    below ``-tol``.
    """

    check: str
    trials: int
    estimate: float
    bound: float
    tol: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.bound - self.estimate

    @property
    def max_violation(self) -> float:
        return max(0.0, -self.slack)

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tol)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "trials": self.trials,
            "estimate": self.estimate,
            "bound": self.bound,
            "slack": self.slack,
            "max_violation": self.max_violation,
            "passed": self.passed,
            **({"detail": self.detail} if self.detail else {}),
        }


def _rng(seed):
    return np.random.default_rng(seed)


def verify_sandwich(trials: int, p: int, kappa: int, beta: float, rng_seed: int,
                    *, scale: float = 3.0, bound_scale: float = 1.0) -> CheckResult:
    """Check ``0 <= F - x_[k] <= (ln k + ln C(p,k))/beta <= k ln p / beta``.

    The reported estimate is the largest excess of any of the three
    inequalities over ``trials`` Gaussian vectors of standard deviation
    ``scale``; the check passes when no excess exceeds 1e-9. ``bound_scale``
    shrinks the gap bound and exists only to exercise the failure path.
    """
    params = SmoothParams(beta=beta, kappa=kappa, p=p)
    rng = _rng(rng_seed)
    gap_bound = params.gap_bound * bound_scale
    loose = kappa * math.log(p) / beta
    worst = -math.inf
    min_gap, max_gap = math.inf, -math.inf
    for _ in range(trials):
        x = scale * rng.standard_normal(p)
        gap = smooth_kmax(x, params) - kth_largest(x, kappa)
        min_gap, max_gap = min(min_gap, gap), max(max_gap, gap)
        worst = max(worst, -gap, gap - gap_bound)
    worst = max(worst, gap_bound - loose)
    return CheckResult(
        check=f"sandwich(p={p},kappa={kappa},beta={beta})",
        trials=trials,
        estimate=worst,
        bound=0.0,
        tol=1e-9,
        detail={"min_gap": min_gap, "max_gap": max_gap,
                "gap_bound": gap_bound, "loose_bound": loose},
    )


def finite_difference_grad(x, params: SmoothParams, h: float = 1e-5) -> np.ndarray:
    x = _check_x(x, params)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (smooth_kmax(x + e, params) - smooth_kmax(x - e, params)) / (2 * h)
    return out


def verify_gradient(points: int, params: SmoothParams, rng_seed: int,
                    *, h: float = 1e-5, rtol: float = 1e-4) -> CheckResult:
    """Unit-sum, nonnegativity and finite-difference agreement of the gradient.

    The estimate is the worst of: ``|sum(pi) - 1| / 1e-9``, ``-min(pi) / 1e-12``
    and ``|fd - pi| / (rtol |pi| + 1e-8)``, each normalised so that 1 is
    the limit.
    """
    rng = _rng(rng_seed)
    sum_err = neg = fd_err = 0.0
    for _ in range(points):
        x = 2.0 * rng.standard_normal(params.p)
        pi = smooth_kmax_grad(x, params)
        fd = finite_difference_grad(x, params, h)
        sum_err = max(sum_err, abs(pi.sum() - 1.0))
        neg = max(neg, -pi.min())
        # relative tolerance plus a tiny absolute floor for near-zero components
        fd_err = max(fd_err, float(np.max(np.abs(fd - pi) / (rtol * np.abs(pi) + 1e-8))))
    score = max(sum_err / 1e-9, neg / 1e-12, fd_err)
    return CheckResult(
        check=f"gradient(p={params.p},kappa={params.kappa},beta={params.beta})",
        trials=points,
        estimate=score,
        bound=1.0,
        detail={"max_sum_error": sum_err, "max_negative": neg,
                "max_fd_scaled_error": fd_err},
    )


def hessian_abs_sum(x, params: SmoothParams, h: float = 1e-5) -> float:
    """``sum_jk |d_j d_k F|`` by central differences of the analytic gradient."""
    x = _check_x(x, params)
    H = np.empty((params.p, params.p))
    for k in range(params.p):
        e = np.zeros_like(x)
        e[k] = h
        H[:, k] = (smooth_kmax_grad(x + e, params) - smooth_kmax_grad(x - e, params)) / (2 * h)
    return float(np.abs((H + H.T) / 2).sum())


def verify_second_derivative_bound(samples: int, params: SmoothParams, rng_seed: int,
                                   *, slack: float = 1e-3,
                                   bound_scale: float = 1.0) -> CheckResult:
    rng = _rng(rng_seed)
    h = 1e-5 / max(1.0, params.beta / 10)
    est = max(hessian_abs_sum(rng.standard_normal(params.p), params, h)
              for _ in range(samples))
    return CheckResult(
        check=f"second_derivative(p={params.p},kappa={params.kappa},beta={params.beta})",
        trials=samples,
        estimate=est,
        bound=4.0 * params.beta * bound_scale,
        tol=slack,
    )
