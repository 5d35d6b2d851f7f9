import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kboot.exceptions import EmptyDistributionError, InsufficientDataError, RankError
from kboot.sampling import CovarianceSpec, SeedSpec, sample_gaussian
from kboot.stats_core import (
    absolute_embedding,
    center_columns,
    empirical_covariance,
    empirical_quantile,
    kth_largest,
    kth_largest_rows,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
vectors = arrays(np.float64, st.integers(1, 30), elements=finite)


def inf_scan_quantile(draws, gamma):
    """Brute force: smallest draw t with #{d <= t}/B >= gamma."""
    B = len(draws)
    for t in sorted(draws):
        if sum(d <= t for d in draws) / B >= gamma:
            return t
    raise AssertionError("unreachable")


class TestKthLargest:
    def test_small_sort(self):
        assert kth_largest([3, 1, 2], 2) == 2

    def test_all_ties(self):
        assert kth_largest([5, 5, 5], 3) == 5

    def test_against_full_sort(self):
        v = np.random.default_rng(3).standard_normal(8)
        assert kth_largest(v, 3) == sorted(v, reverse=True)[2]

    @pytest.mark.parametrize("k", [0, 4, -1])
    def test_rank_error(self, k):
        with pytest.raises(RankError):
            kth_largest([1.0, 2.0, 3.0], k)

    def test_rows_match_scalar(self):
        V = np.random.default_rng(0).standard_normal((20, 7))
        for k in range(1, 8):
            np.testing.assert_array_equal(kth_largest_rows(V, k),
                                          [kth_largest(r, k) for r in V])

    @given(vectors)
    def test_nonincreasing_in_k(self, v):
        vals = [kth_largest(v, k) for k in range(1, v.size + 1)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestEmpiricalQuantile:
    def test_half(self):
        assert empirical_quantile([1, 2, 3, 4], 0.5) == 2

    def test_degenerate(self):
        for g in (0.01, 0.5, 0.99):
            assert empirical_quantile([7.5] * 13, g) == 7.5

    def test_hundred_distinct(self):
        d = np.random.default_rng(1).permutation(np.arange(1.0, 101.0)) * 0.37
        q = empirical_quantile(d, 0.95)
        assert q == inf_scan_quantile(list(d), 0.95)
        assert q == np.sort(d)[94]

    def test_empty(self):
        with pytest.raises(EmptyDistributionError):
            empirical_quantile([], 0.5)

    @settings(max_examples=200)
    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=40),
           st.floats(0.001, 0.999))
    def test_matches_inf_scan(self, draws, gamma):
        draws = [float(d) for d in draws]
        q = empirical_quantile(draws, gamma)
        assert q == inf_scan_quantile(draws, gamma)
        assert q in draws
        B = len(draws)
        assert sum(d <= q for d in draws) / B >= gamma
        smaller = [d for d in draws if d < q]
        if smaller:
            assert sum(d <= max(smaller) for d in draws) / B < gamma

    @given(st.lists(finite, min_size=1, max_size=30), st.floats(0.01, 0.98),
           st.floats(0.0, 0.5))
    def test_monotone_in_gamma(self, draws, g, dg):
        g2 = min(0.99, g + dg)
        assert empirical_quantile(draws, g) <= empirical_quantile(draws, g2)


class TestCentering:
    def test_identical_rows(self):
        np.testing.assert_array_equal(center_columns([[1.0, 2.0], [1.0, 2.0]]), 0.0)

    def test_two_rows(self):
        np.testing.assert_array_equal(center_columns([[0.0], [2.0]]), [[-1.0], [1.0]])

    def test_column_sums_vanish(self):
        X = np.random.default_rng(2).standard_normal((5, 3)) * 10
        s = center_columns(X).sum(axis=0)
        assert np.all(np.abs(s) <= 1e-10 * 5 * np.abs(X).max())

    @given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 5)),
                  elements=st.floats(-1e3, 1e3, allow_nan=False)))
    def test_idempotent(self, X):
        once = center_columns(X)
        np.testing.assert_allclose(center_columns(once), once, atol=1e-9)


class TestCovariance:
    def test_identical_rows(self):
        np.testing.assert_array_equal(empirical_covariance(np.ones((4, 3))), 0.0)

    def test_divisor_n(self):
        np.testing.assert_array_equal(empirical_covariance([[-1.0], [1.0]]), [[1.0]])

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            empirical_covariance([[1.0, 2.0]])

    def test_ar1_sample(self):
        n = 200
        theta = CovarianceSpec.ar1(0.5).to_matrix(3)
        X = sample_gaussian(CovarianceSpec.ar1(0.5), n, SeedSpec(11), p=3)
        S = empirical_covariance(X)
        assert np.all(np.abs(S - theta) <= 5 / np.sqrt(n))
        np.testing.assert_array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() >= -1e-12

    def test_matches_numpy_biased(self):
        X = np.random.default_rng(5).standard_normal((30, 4))
        np.testing.assert_allclose(empirical_covariance(X), np.cov(X.T, bias=True), atol=1e-14)


class TestEmbedding:
    def test_example(self):
        e = absolute_embedding([1.0, -2.0])
        np.testing.assert_array_equal(e, [1, -2, -1, 2])
        assert kth_largest(e, 1) == 2

    def test_zero(self):
        np.testing.assert_array_equal(absolute_embedding(np.zeros(3)), np.zeros(6))

    @given(vectors)
    def test_matches_abs(self, v):
        e = absolute_embedding(v)
        for k in range(1, v.size + 1):
            assert kth_largest(e, k) == kth_largest(np.abs(v), k)
