"""Seeded random generation: model data, Gaussian vectors and multiplier weights.

Seeding
-------
A :class:`SeedSpec` ``(master_seed, stream_id)`` maps to a Philox
counter-based generator whose 128-bit key is exactly the pair of 64-bit
words ``[master_seed, stream_id]``. Distinct pairs therefore give distinct
keys, and any stream can be regenerated on its own without replaying the
others. Nested experiments derive child master seeds with
:func:`derive_seed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import ConfigError, NotPSDError

_U64 = 2**64


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or not 0 <= int(v) < _U64:
                raise ConfigError(f"{name} must be an integer in [0, 2**64), got {v!r}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, *path: int) -> int:
    """Child master seed for a labelled sub-task, e.g. ``(seed, DATA, rep)``."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ----------------------------------------------------------------------------
# covariance
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Either an AR(1) structure ``rho**|i-j|`` or an explicit matrix."""

    kind: Literal["ar1", "explicit"] = "ar1"
    rho: float = 0.0
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "ar1":
            if not -1.0 < self.rho < 1.0:
                raise ConfigError(f"AR(1) rho must lie in (-1, 1), got {self.rho}")
        elif self.kind == "explicit":
            if self.matrix is None:
                raise ConfigError("explicit covariance needs a matrix")
            M = np.asarray(self.matrix, dtype=np.float64)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ConfigError(f"covariance must be square, got shape {M.shape}")
            if not np.all(np.isfinite(M)) or not np.allclose(M, M.T, rtol=1e-10, atol=1e-12):
                raise ConfigError("covariance must be finite and symmetric")
            object.__setattr__(self, "matrix", M)
        else:
            raise ConfigError(f"unknown covariance kind {self.kind!r}")

    @classmethod
    def ar1(cls, rho: float) -> CovarianceSpec:
        return cls(kind="ar1", rho=rho)

    @classmethod
    def explicit(cls, matrix) -> CovarianceSpec:
        return cls(kind="explicit", matrix=np.asarray(matrix, dtype=np.float64))

    def to_matrix(self, p: int | None = None) -> np.ndarray:
        if self.kind == "ar1":
            if p is None:
                raise ConfigError("AR(1) covariance needs the dimension p")
            idx = np.arange(p)
            return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
        if p is not None and self.matrix.shape[0] != p:
            raise ConfigError(f"covariance is {self.matrix.shape[0]}-dimensional, expected {p}")
        return self.matrix

    def to_dict(self) -> dict:
        if self.kind == "ar1":
            return {"kind": "ar1", "rho": self.rho}
        return {"kind": "explicit", "matrix": self.matrix.tolist()}


def cholesky_factor(S) -> np.ndarray:
    """Lower Cholesky factor of ``S``.

    On failure the diagonal is bumped once by ``1e-10 * trace(S) / p``;
    a second failure raises :class:`NotPSDError`.
    """
    S = np.asarray(S, dtype=np.float64)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    p = S.shape[0]
    jitter = 1e-10 * max(float(np.trace(S)), 0.0) / p
    try:
        return np.linalg.cholesky(S + jitter * np.eye(p))
    except np.linalg.LinAlgError:
        raise NotPSDError("covariance is not positive semidefinite (Cholesky failed "
                          "after diagonal jitter)") from None


def gaussian_rows(L: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` rows ``L z`` with ``z`` standard normal."""
    Z = rng.standard_normal((count, L.shape[0]))
    return Z @ L.T


def sample_gaussian(cov: CovarianceSpec, count: int, seed: SeedSpec,
                    p: int | None = None) -> np.ndarray:
    """``count`` i.i.d. rows from ``N(0, cov)``, shape ``(count, p)``."""
    L = cholesky_factor(cov.to_matrix(p))
    return gaussian_rows(L, count, seed.generator())


# ----------------------------------------------------------------------------
# models
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Data-generating model: multivariate normal or multivariate t.

    For ``student_t`` the scale matrix is ``cov * (df - 2) / df`` so that the
    *covariance* of each row equals ``cov``. Libraries that treat ``cov`` as
    the scale matrix produce rows inflated by ``df / (df - 2)``.
    """

    model: Literal["normal", "student_t"] = "normal"
    cov: CovarianceSpec = CovarianceSpec()
    n: int = 100
    p: int = 150
    df: float = 10.0

    def __post_init__(self):
        if self.model not in ("normal", "student_t"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.model == "student_t" and not self.df > 2:
            raise ConfigError(f"student_t needs df > 2 for a finite covariance, got {self.df}")
        if self.n < 1 or self.p < 1:
            raise ConfigError(f"n and p must be positive, got n={self.n}, p={self.p}")

    def to_dict(self) -> dict:
        d = {"model": self.model, "cov": self.cov.to_dict(), "n": self.n, "p": self.p}
        if self.model == "student_t":
            d["df"] = self.df
        return d


def sample_model(spec: ModelSpec, seed: SeedSpec, factor: np.ndarray | None = None) -> np.ndarray:
    """Draw an ``(n, p)`` data matrix from ``spec``.

    ``factor`` may carry a precomputed Cholesky factor of the covariance to
    avoid refactoring across repetitions.
    """
    L = factor if factor is not None else cholesky_factor(spec.cov.to_matrix(spec.p))
    rng = seed.generator()
    X = gaussian_rows(L, spec.n, rng)
    if spec.model == "student_t":
        nu = spec.df
        W = rng.chisquare(nu, size=spec.n)
        X *= np.sqrt((nu - 2.0) / W)[:, None]
    return X


# ----------------------------------------------------------------------------
# multiplier weights
# ----------------------------------------------------------------------------

_SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = -(_SQRT5 - 1.0) / 2.0
MAMMEN_HIGH = (_SQRT5 + 1.0) / 2.0
MAMMEN_P_LOW = (_SQRT5 + 1.0) / (2.0 * _SQRT5)


@dataclass(frozen=True)
class WeightScheme:
    """Multiplier weight law. All schemes have mean 0 and variance 1.

    ``std_beta`` is ``(B - m) / s`` for ``B ~ Beta(alpha, beta)`` with mean
    ``m`` and standard deviation ``s``; with ``(1/2, 3/2)`` its third moment
    is 1, as it is for ``mammen``.
    """

    kind: Literal["gaussian", "rademacher", "mammen", "std_beta"] = "gaussian"
    alpha: float = 0.5
    beta: float = 1.5

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher", "mammen", "std_beta"):
            raise ConfigError(f"unknown weight scheme {self.kind!r}")
        if self.kind == "std_beta":
            if not (self.alpha > 0 and self.beta > 0
                    and math.isfinite(self.alpha) and math.isfinite(self.beta)):
                raise ConfigError(
                    f"Beta shape parameters must be positive, got ({self.alpha}, {self.beta})")

    def beta_moments(self) -> tuple[float, float]:
        a, b = self.alpha, self.beta
        mean = a / (a + b)
        var = a * b / ((a + b) ** 2 * (a + b + 1.0))
        return mean, var

    def to_dict(self) -> dict:
        if self.kind == "std_beta":
            return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}
        return {"kind": self.kind}


def draw_weights(scheme: WeightScheme, count: int, rng: np.random.Generator) -> np.ndarray:
    if scheme.kind == "gaussian":
        return rng.standard_normal(count)
    if scheme.kind == "rademacher":
        return 2.0 * rng.integers(0, 2, size=count).astype(np.float64) - 1.0
    if scheme.kind == "mammen":
        return np.where(rng.random(count) < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)
    mean, var = scheme.beta_moments()
    return (rng.beta(scheme.alpha, scheme.beta, size=count) - mean) / math.sqrt(var)


def sample_weights(scheme: WeightScheme, count: int, seed: SeedSpec) -> np.ndarray:
    """``count`` i.i.d. multiplier weights from ``scheme``."""
    return draw_weights(scheme, count, seed.generator())
