"""Named suites of numerical property checks."""

from __future__ import annotations

import math

from .experiments import (
    anticoncentration_checks,
    comparison_ladder,
    gaussian_comparison_check,
    gaussian_inequality_check,
    levy_concentration_estimate,
)
from .exceptions import ConfigError
from .sampling import CovarianceSpec, derive_seed
from .smooth import (
    CheckResult,
    SmoothParams,
    verify_gradient,
    verify_sandwich,
    verify_second_derivative_bound,
)

SUITES = ("smooth", "anticoncentration", "gaussian", "comparison")


def smooth_suite(seed: int, bound_scale: float = 1.0) -> list[CheckResult]:
    out = []
    for kappa in range(1, 7):
        for beta in (1.0, 5.0, 20.0):
            out.append(verify_sandwich(100, 12, kappa, beta,
                                       derive_seed(seed, 1, kappa, int(beta)),
                                       bound_scale=bound_scale))
    for i, (p, kappa, beta) in enumerate([(6, 2, 2.0), (8, 3, 3.0), (10, 1, 5.0), (9, 5, 1.0)]):
        out.append(verify_gradient(50 if i == 0 else 10, SmoothParams(beta, kappa, p),
                                   derive_seed(seed, 2, i)))
    for i, (kappa, beta) in enumerate([(2, 2.0), (1, 2.0), (3, 2.0), (2, 50.0)]):
        out.append(verify_second_derivative_bound(20, SmoothParams(beta, kappa, 6),
                                                  derive_seed(seed, 3, i),
                                                  bound_scale=bound_scale))
    return out


def anticoncentration_suite(seed: int, bound_scale: float = 1.0, M: int = 100_000,
                            p: int = 50, kappa: int = 3,
                            eps=(0.01, 0.02, 0.04)) -> list[CheckResult]:
    rep = levy_concentration_estimate(CovarianceSpec.ar1(0.5), kappa, eps, M,
                                      derive_seed(seed, 4), p=p)
    checks = anticoncentration_checks(rep)
    for c in checks:
        c.bound *= bound_scale
    return checks


def gaussian_suite(seed: int, bound_scale: float = 1.0, M: int = 100_000) -> list[CheckResult]:
    out = []
    for p in (10, 100, 1000):
        out.extend(gaussian_inequality_check(1.0, p, M, derive_seed(seed, 5, p),
                                             bound_scale=bound_scale))
    return out


def comparison_suite(seed: int, bound_scale: float = 1.0, M: int = 100_000, p: int = 20,
                     kappa: int = 2, deltas=(0.01, 0.04, 0.16)) -> list[CheckResult]:
    base = CovarianceSpec.ar1(0.5)
    same = gaussian_comparison_check(base, base, kappa, M, derive_seed(seed, 6), p=p)
    out = [CheckResult(check=f"comparison_identical(p={p},kappa={kappa})", trials=M,
                       estimate=same.ks, bound=2 * 1.36 / math.sqrt(M) * bound_scale)]
    ladder = comparison_ladder(base, p, kappa, deltas, M, derive_seed(seed, 7))
    ks = [r.ks for r in ladder]
    ses = [r.se for r in ladder]
    # worst drop between consecutive rungs, in units of its allowed tolerance
    worst = max((k1 - k2) / (2 * math.hypot(s1, s2))
                for k1, k2, s1, s2 in zip(ks, ks[1:], ses, ses[1:]))
    out.append(CheckResult(check=f"comparison_ladder(p={p},kappa={kappa})", trials=M,
                           estimate=worst, bound=1.0 * bound_scale,
                           detail={"deltas": list(deltas), "ks": ks, "mc_se": ses}))
    return out


def run_suite(name: str, seed: int = 0, bound_scale: float = 1.0) -> list[CheckResult]:
    """Run one suite, or every suite for ``"all"``.

    ``bound_scale`` multiplies the bounds; values below 1 tighten them and
    exist to exercise the failure path.
    """
    table = {"smooth": smooth_suite, "anticoncentration": anticoncentration_suite,
             "gaussian": gaussian_suite, "comparison": comparison_suite}
    if name == "all":
        return [c for s in SUITES for c in table[s](seed, bound_scale)]
    if name not in table:
        raise ConfigError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    return table[name](seed, bound_scale)
