import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit, logit

from postdev.numerics import (
    draw_beta,
    draw_beta_logit,
    draw_categorical,
    draw_normal,
    draw_uniform,
    gauss_hermite_normalized,
    kde,
    kde_logit,
    log_beta,
    log_binom_coeff,
    rng_stream,
    silverman_bandwidth,
)


class TestQuadrature:
    def test_constant(self):
        rule = gauss_hermite_normalized(20)
        assert rule.expect(np.ones_like) == pytest.approx(1.0, abs=1e-14)

    def test_second_moment(self):
        assert gauss_hermite_normalized(20).expect(lambda z: z ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_fourth_moment(self):
        # E Z^4 = 3
        assert gauss_hermite_normalized(20).expect(lambda z: z ** 4) == pytest.approx(3.0, abs=1e-10)

    @pytest.mark.parametrize("K", [8, 20, 32])
    def test_low_moments(self, K):
        rule = gauss_hermite_normalized(K)
        for power, expected in [(0, 1.0), (1, 0.0), (2, 1.0)]:
            assert abs(rule.expect(lambda z: z ** power) - expected) < 1e-10

    @pytest.mark.parametrize("K", [1, 2, 5, 20, 40, 64])
    def test_structure(self, K):
        rule = gauss_hermite_normalized(K)
        assert rule.K == K
        assert abs(rule.weights.sum() - 1) < 1e-12
        assert np.all(rule.weights > 0)
        np.testing.assert_array_equal(rule.nodes, -rule.nodes[::-1])
        assert np.all(np.diff(rule.nodes) > 0)

    @pytest.mark.parametrize("K", [3, 6, 10])
    def test_exact_degree(self, K):
        # exact through degree 2K - 1; E Z^(2j) = (2j - 1)!!
        rule = gauss_hermite_normalized(K)
        for deg in range(2 * K):
            exact = 0.0 if deg % 2 else float(np.prod(np.arange(deg - 1, 0, -2)))
            got = rule.expect(lambda z: z ** deg)
            scale = float(np.dot(np.abs(rule.nodes) ** deg, rule.weights))
            assert abs(got - exact) <= 1e-12 * scale

    def test_matches_numpy_table(self):
        z, w = np.polynomial.hermite_e.hermegauss(20)
        rule = gauss_hermite_normalized(20)
        np.testing.assert_allclose(rule.nodes, z, atol=1e-12)
        np.testing.assert_allclose(rule.weights, w / w.sum(), rtol=1e-9)

    @pytest.mark.parametrize("K", [0, 65, 2.5, -1])
    def test_out_of_range(self, K):
        with pytest.raises(ValueError):
            gauss_hermite_normalized(K)


class TestSpecialFunctions:
    def test_log_beta_values(self):
        assert log_beta(1, 1) == 0.0
        # B(2, 3) = 1! 2! / 4!
        assert log_beta(2, 3) == pytest.approx(math.log(math.factorial(1) * math.factorial(2) / math.factorial(4)), rel=1e-14)
        assert log_beta(0.5, 0.5) == pytest.approx(math.log(math.pi), rel=1e-14)

    @pytest.mark.parametrize("a, b", [(1e6, 3.5), (2.5e5, 7e5), (0.01, 1e6), (412.9, 3.7)])
    def test_log_beta_large_arguments(self, a, b):
        mpmath.mp.dps = 40
        exact = mpmath.log(mpmath.beta(a, b))
        assert abs(log_beta(a, b) - float(exact)) <= 1e-10 * abs(float(exact))

    @given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6))
    def test_log_beta_symmetric(self, a, b):
        assert log_beta(a, b) == log_beta(b, a)

    def test_log_beta_rejects(self):
        with pytest.raises(ValueError):
            log_beta(0, 1)
        with pytest.raises(ValueError):
            log_beta(1, -2)

    def test_log_binom_small(self):
        assert log_binom_coeff(17, 0) == 0.0
        assert log_binom_coeff(4, 2) == pytest.approx(math.log(6), rel=1e-14)

    @pytest.mark.parametrize("n, r", [(54155, 402), (28937, 251), (10 ** 6, 4321), (163, 0), (22514, 334)])
    def test_log_binom_big_integer_oracle(self, n, r):
        mpmath.mp.dps = 50
        exact = float(mpmath.log(math.comb(n, r)))
        got = log_binom_coeff(n, r)
        assert abs(got - exact) <= 1e-9 * max(abs(exact), 1.0)

    def test_pascal(self):
        for n in range(2, 61):
            for r in range(1, n):
                lhs = log_binom_coeff(n, r)
                rhs = np.logaddexp(log_binom_coeff(n - 1, r - 1), log_binom_coeff(n - 1, r))
                assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_log_binom_rejects(self):
        with pytest.raises(ValueError):
            log_binom_coeff(3, 4)


class TestDraws:
    def test_streams_reproducible(self):
        a = rng_stream(7, 1, 2).random(5)
        b = rng_stream(7, 1, 2).random(5)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, rng_stream(7, 1, 3).random(5))
        assert not np.array_equal(a, rng_stream(8, 1, 2).random(5))

    def test_degenerate_normal(self):
        assert np.all(draw_normal(rng_stream(1), 5.0, 0.0, size=100) == 5.0)

    def test_normal_rejects(self):
        with pytest.raises(ValueError):
            draw_normal(rng_stream(1), 0.0, -1.0)

    def test_beta_mean(self):
        x = draw_beta(rng_stream(3), 1, 164, size=100_000)
        se = math.sqrt(164 / (165 ** 2 * 166)) / math.sqrt(x.size)
        assert abs(x.mean() - 1 / 165) < 3 * se
        assert np.all((x > 0) & (x < 1))

    def test_beta_logit_matches_beta(self):
        x = draw_beta(rng_stream(5), 2.0, 3.0, size=20_000)
        y = draw_beta_logit(rng_stream(5), 2.0, 3.0, size=20_000)
        np.testing.assert_allclose(expit(y), x, rtol=1e-12)

    def test_beta_rejects(self):
        with pytest.raises(ValueError):
            draw_beta(rng_stream(1), 0.0, 1.0)

    def test_categorical_degenerate(self):
        idx = draw_categorical(rng_stream(2), [0, 1, 0], size=1000)
        assert np.all(idx == 1)

    def test_categorical_unnormalized(self):
        idx = draw_categorical(rng_stream(2), [2.0, 6.0], size=40_000)
        p = np.mean(idx == 1)
        assert abs(p - 0.75) < 3 * math.sqrt(0.75 * 0.25 / 40_000)

    @pytest.mark.parametrize("w", [[], [0, 0], [-1, 2], [np.nan, 1]])
    def test_categorical_rejects(self, w):
        with pytest.raises(ValueError):
            draw_categorical(rng_stream(1), w)

    def test_uniform(self):
        u = draw_uniform(rng_stream(1), 2.0, 3.0, size=1000)
        assert np.all((u >= 2) & (u < 3))
        with pytest.raises(ValueError):
            draw_uniform(rng_stream(1), 1.0, 0.0)


class TestKde:
    def test_repeated_value_is_kernel(self):
        p, h = 0.01, 0.3
        grid = np.linspace(-7, -2, 101)
        curve = kde_logit(np.full(10, p), bandwidth=h, grid=grid)
        mu = logit(p)
        expected = np.exp(-0.5 * ((grid - mu) / h) ** 2) / (h * math.sqrt(2 * math.pi))
        np.testing.assert_allclose(curve.densities, expected, rtol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(1e-4, 1 - 1e-4), min_size=2, max_size=50), st.floats(0.05, 2.0))
    def test_normalized(self, rates, h):
        curve = kde_logit(rates, bandwidth=h, points=2048)
        assert abs(curve.integral() - 1) < 0.02

    def test_auto_bandwidth_normalized(self):
        x = rng_stream(4).standard_normal(500)
        curve = kde(x)
        assert curve.bandwidth == pytest.approx(1.06 * x.std(ddof=1) * 500 ** -0.2)
        assert abs(curve.integral() - 1) < 0.02

    def test_mode_recovers_mean(self):
        theta = -4.8 + 0.25 * rng_stream(11).standard_normal(10_000)
        curve = kde_logit(expit(theta))
        assert abs(curve.mode() - (-4.8)) < 0.05

    def test_rejects(self):
        with pytest.raises(ValueError):
            kde_logit([0.5])
        with pytest.raises(ValueError):
            kde_logit([0.0, 0.5])
        with pytest.raises(ValueError):
            kde_logit([0.2, 1.0])
        with pytest.raises(ValueError):
            silverman_bandwidth([1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            kde([1.0, 2.0], bandwidth=0.0)

    def test_quantiles(self):
        x = rng_stream(12).standard_normal(20_000)
        curve = kde(x, points=2048)
        assert curve.quantile(0.5) == pytest.approx(0.0, abs=0.03)
        assert curve.iqr() == pytest.approx(1.349, abs=0.06)
