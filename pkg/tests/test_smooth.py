import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kboot.exceptions import CapacityError, ConfigError
from kboot.smooth import (
    SmoothParams,
    finite_difference_grad,
    g_subset,
    smooth_kmax,
    smooth_kmax_grad,
    subset_family,
    verify_gradient,
    verify_sandwich,
    verify_second_derivative_bound,
)
from kboot.stats_core import kth_largest


def direct_smooth_kmax(x, kappa, beta):
    """Naive evaluation of the defining double sum (no stabilisation)."""
    total = 0.0
    for A in itertools.combinations(range(len(x)), kappa):
        inner = sum(math.exp(-beta * x[s]) for s in A)
        g = -math.log(inner) / beta + math.log(kappa) / beta
        total += math.exp(beta * g)
    return math.log(total) / beta


class TestSubsetFamily:
    def test_colex_order(self):
        S = subset_family(4, 2).tolist()
        assert S == [[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3]]

    @pytest.mark.parametrize("p,k", [(5, 1), (6, 3), (9, 4)])
    def test_count_and_increasing(self, p, k):
        S = subset_family(p, k)
        assert len(S) == math.comb(p, k)
        assert np.all(np.diff(S, axis=1) > 0)
        assert len({tuple(r) for r in S}) == len(S)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            SmoothParams(beta=1.0, kappa=10, p=40)


class TestParams:
    def test_kappa_above_half(self):
        with pytest.raises(ConfigError):
            SmoothParams(beta=1.0, kappa=4, p=6)

    def test_beta_positive(self):
        with pytest.raises(ConfigError):
            SmoothParams(beta=0.0, kappa=1, p=3)


class TestGSubset:
    def test_zero_vector(self):
        assert g_subset([0, 0, 0], [0, 1], SmoothParams(1.0, 2, 3)) == pytest.approx(0.0, abs=1e-15)

    def test_singleton(self):
        x = [0.3, -1.7, 2.2]
        assert g_subset(x, [1], SmoothParams(4.0, 1, 3)) == pytest.approx(-1.7, abs=1e-15)

    def test_equal_coordinates(self):
        params = SmoothParams(2.5, 2, 5)
        x = [1.5, 1.5, 1.5, 0.0, 9.0]
        # c - (ln|A| - ln kappa) / beta with |A| = 3
        expected = 1.5 - (math.log(3) - math.log(2)) / 2.5
        assert g_subset(x, [0, 1, 2], params) == pytest.approx(expected, abs=1e-13)


class TestSmoothKmax:
    def test_logsumexp_case(self):
        assert smooth_kmax([0, 0], SmoothParams(1.0, 1, 2)) == pytest.approx(math.log(2), abs=1e-14)

    def test_three_subsets(self):
        assert smooth_kmax([0, 0, 0], SmoothParams(1.0, 2, 3)) == pytest.approx(math.log(3), abs=1e-14)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(0)
        for kappa in (1, 2, 3):
            x = rng.standard_normal(7)
            assert smooth_kmax(x, SmoothParams(1.7, kappa, 7)) == pytest.approx(
                direct_smooth_kmax(x, kappa, 1.7), rel=1e-12)

    def test_stable_for_large_beta(self):
        x = np.array([300.0, -200.0, 50.0, 1.0])
        v = smooth_kmax(x, SmoothParams(50.0, 2, 4))
        assert math.isfinite(v)
        assert 0 <= v - kth_largest(x, 2) <= SmoothParams(50.0, 2, 4).gap_bound

    def test_constant_vector_observation(self):
        # every g_A equals c, so F - c = ln C(p, k) / beta: strictly below the gap bound
        params = SmoothParams(3.0, 3, 9)
        gap = smooth_kmax(np.full(9, 2.0), params) - 2.0
        assert gap == pytest.approx(math.log(math.comb(9, 3)) / 3.0, abs=1e-12)
        assert gap < params.gap_bound

    @settings(max_examples=50)
    @given(arrays(np.float64, 6, elements=st.floats(-5, 5)), st.floats(-10, 10))
    def test_translation_equivariance(self, x, c):
        params = SmoothParams(2.0, 2, 6)
        assert smooth_kmax(x + c, params) == pytest.approx(smooth_kmax(x, params) + c, abs=1e-10)

    @settings(max_examples=50)
    @given(arrays(np.float64, 6, elements=st.floats(-5, 5)), st.randoms())
    def test_permutation_invariance(self, x, r):
        params = SmoothParams(2.0, 3, 6)
        perm = list(range(6))
        r.shuffle(perm)
        assert smooth_kmax(x[perm], params) == pytest.approx(smooth_kmax(x, params), abs=1e-12)

    @settings(max_examples=50)
    @given(arrays(np.float64, 6, elements=st.floats(-5, 5)),
           arrays(np.float64, 6, elements=st.floats(0, 3)))
    def test_monotone(self, x, d):
        params = SmoothParams(3.0, 2, 6)
        assert smooth_kmax(x, params) <= smooth_kmax(x + d, params) + 1e-12


class TestGradient:
    def test_symmetric(self):
        np.testing.assert_allclose(smooth_kmax_grad([0, 0, 0], SmoothParams(1.0, 1, 3)),
                                   [1 / 3] * 3, atol=1e-15)

    def test_two_term_closed_form(self):
        g = smooth_kmax_grad([10.0, 0.0], SmoothParams(1.0, 1, 2))
        assert g[0] == pytest.approx(math.exp(10) / (math.exp(10) + 1), rel=1e-14)

    def test_finite_differences(self):
        rng = np.random.default_rng(4)
        params = SmoothParams(2.0, 3, 8)
        for _ in range(5):
            x = rng.standard_normal(8)
            pi = smooth_kmax_grad(x, params)
            fd = finite_difference_grad(x, params)
            assert np.all(np.abs(fd - pi) <= 1e-4 * np.abs(pi) + 1e-8)

    @settings(max_examples=50)
    @given(arrays(np.float64, 7, elements=st.floats(-20, 20)), st.floats(0.1, 30))
    def test_simplex(self, x, beta):
        pi = smooth_kmax_grad(x, SmoothParams(beta, 3, 7))
        assert pi.min() >= -1e-12
        assert abs(pi.sum() - 1) <= 1e-9


class TestVerifiers:
    def test_sandwich_example(self):
        r = verify_sandwich(100, 12, 3, 5.0, rng_seed=0)
        assert r.passed and r.max_violation == 0.0

    def test_sandwich_kappa1_bound(self):
        r = verify_sandwich(50, 10, 1, 2.0, rng_seed=1)
        assert r.detail["gap_bound"] == pytest.approx(math.log(10) / 2.0)
        assert r.passed

    def test_sandwich_failure_path(self):
        r = verify_sandwich(20, 8, 2, 1.0, rng_seed=2, bound_scale=0.01)
        assert not r.passed and r.max_violation > 0
        assert set(r.to_dict()) >= {"check", "trials", "max_violation", "bound", "passed"}

    def test_gradient_check(self):
        assert verify_gradient(10, SmoothParams(3.0, 2, 7), 3).passed

    @pytest.mark.parametrize("kappa,beta", [(2, 2.0), (1, 2.0), (2, 50.0)])
    def test_second_derivative(self, kappa, beta):
        r = verify_second_derivative_bound(20, SmoothParams(beta, kappa, 6), 5)
        assert r.passed
        assert r.estimate <= 4 * beta + 1e-3
