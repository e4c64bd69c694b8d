import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from postdev.area_inference import AreaDrawMatrix
from postdev.averaging import (
    AlignedDraws,
    AveragingConfig,
    averaged_area_draws,
    averaged_typical_city,
    posterior_model_probs,
)
from postdev.deviance_compare import STRONG_EVIDENCE
from postdev.models import Model
from postdev.numerics import kde_logit, rng_stream

N, B, S = Model.NORMAL, Model.BETA, Model.SATURATED


def matrix(seed, T=200, m=5, name="x"):
    return AreaDrawMatrix(name, rng_stream(seed).uniform(0.001, 0.05, (T, m)))


def aligned(devs, seeds=None, T=200):
    models = list(devs)
    seeds = seeds or list(range(len(models)))
    return AlignedDraws(
        {m: np.broadcast_to(np.asarray(d, dtype=float), (T,)).copy() for m, d in devs.items()},
        {m: matrix(s, T) for m, s in zip(models, seeds)},
    )


class TestConfig:
    def test_equal(self):
        c = AveragingConfig.equal([N, B, S])
        assert c.prior_probs == pytest.approx((1 / 3,) * 3)

    @pytest.mark.parametrize("models, priors", [
        ((), ()), ((N, N), (0.5, 0.5)), ((N, B), (0.7, 0.7)), ((N, B), (1.2, -0.2)), ((N,), (0.5, 0.5)),
    ])
    def test_invalid(self, models, priors):
        with pytest.raises(ValueError):
            AveragingConfig(models, priors)

    def test_restricted(self):
        c = AveragingConfig((N, B, S), (0.5, 0.3, 0.2)).restricted([N, B])
        assert c.prior_probs == pytest.approx((0.625, 0.375))

    def test_misaligned_rejected(self):
        with pytest.raises(ValueError):
            AlignedDraws({N: np.zeros(10), B: np.zeros(11)}, {})


class TestProbabilities:
    def test_single_model(self):
        p = posterior_model_probs(aligned({N: 300.0}), AveragingConfig.equal([N]))
        np.testing.assert_array_equal(p, 1.0)

    def test_equal_deviances(self):
        p = posterior_model_probs(aligned({N: 364.0, B: 364.0}), AveragingConfig.equal([N, B]))
        np.testing.assert_allclose(p, 0.5, atol=1e-15)

    def test_strong_evidence_split(self):
        p = posterior_model_probs(aligned({N: 364.0 + STRONG_EVIDENCE, B: 364.0}), AveragingConfig.equal([N, B]))
        np.testing.assert_allclose(p[:, 0], 0.9, atol=1e-12)
        np.testing.assert_allclose(p[:, 1], 0.1, atol=1e-12)

    def test_priors_enter(self):
        p = posterior_model_probs(aligned({N: 10.0, B: 10.0}), AveragingConfig((N, B), (0.2, 0.8)))
        np.testing.assert_allclose(p[0], [0.2, 0.8], atol=1e-15)

    @settings(max_examples=40)
    @given(st.lists(st.floats(300, 500), min_size=3, max_size=3), st.floats(-1e5, 1e5))
    def test_shift_invariance(self, devs, c):
        cfg = AveragingConfig.equal([N, B, S])
        a = posterior_model_probs(aligned(dict(zip((N, B, S), devs)), T=1), cfg)
        b = posterior_model_probs(aligned(dict(zip((N, B, S), np.add(devs, c))), T=1), cfg)
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-300)
        assert a.sum() == pytest.approx(1.0, abs=1e-12)

    def test_extreme_gap_no_overflow(self):
        p = posterior_model_probs(aligned({N: 1e5, B: 0.0}), AveragingConfig.equal([N, B]))
        assert np.all(p[:, 1] == 1.0) and np.all(np.isfinite(p))

    def test_missing_model(self):
        with pytest.raises(ValueError):
            posterior_model_probs(aligned({N: 1.0}), AveragingConfig.equal([N, B]))


class TestAreaAveraging:
    def test_prior_one_identity(self):
        al = aligned({N: np.linspace(360, 370, 200), B: 365.0})
        out = averaged_area_draws(al, AveragingConfig((N, B), (1.0, 0.0)), seed=1)
        np.testing.assert_array_equal(out.areas.draws, al.areas[N].draws)

    def test_identical_sources(self):
        T = 200
        same = matrix(9, T)
        al = AlignedDraws({N: np.full(T, 1.0), B: np.full(T, 2.0)}, {N: same, B: same})
        out = averaged_area_draws(al, AveragingConfig.equal([N, B]), seed=1)
        np.testing.assert_array_equal(out.areas.draws, same.draws)

    @pytest.mark.parametrize("per_area", [False, True])
    def test_traceable(self, per_area):
        al = aligned({N: 364.0, B: 365.0, S: 366.0})
        cfg = AveragingConfig.equal([N, B, S])
        out = averaged_area_draws(al, cfg, seed=2, per_area=per_area)
        T, m = out.areas.draws.shape
        sel = out.selected if per_area else np.repeat(out.selected[:, None], m, axis=1)
        for j, model in enumerate(cfg.models):
            hit = sel == j
            np.testing.assert_array_equal(out.areas.draws[hit], al.areas[model].draws[hit])

    def test_equal_probability_frequencies(self):
        T = 20_000
        al = aligned({N: 364.0, B: 364.0}, T=T)
        freq = averaged_area_draws(al, AveragingConfig.equal([N, B]), seed=3).selection_frequencies()
        assert abs(freq["normal"] - 0.5) < 3 * math.sqrt(0.25 / T)

    def test_per_area_same_marginals(self):
        T = 20_000
        al = aligned({N: 364.0, B: 364.0 - STRONG_EVIDENCE}, T=T)
        cfg = AveragingConfig.equal([N, B])
        shared = averaged_area_draws(al, cfg, seed=4)
        each = averaged_area_draws(al, cfg, seed=4, per_area=True)
        assert shared.selected.shape == (T,) and each.selected.shape == (T, 5)
        assert abs(np.mean(shared.selected == 0) - 0.9) < 0.01
        assert abs(np.mean(each.selected == 0) - 0.9) < 0.005


class TestMissouri:
    def test_city84_follows_normal(self, analysis, data):
        i = data.index_of(84)
        avg = analysis.averaged().areas.column(i)
        normal = analysis.draws[N].areas.column(i)
        assert abs(kde_logit(avg).mode() - kde_logit(normal).mode()) < 0.1

    def test_small_city_more_diffuse(self, analysis, data):
        i = data.index_of(1)
        avg = kde_logit(analysis.averaged().areas.column(i), points=2048)
        normal = kde_logit(analysis.draws[N].areas.column(i), points=2048)
        assert avg.iqr() > normal.iqr()

    def test_selection_matches_mean_probability(self, analysis):
        cfg = analysis.config
        probs = posterior_model_probs(analysis.aligned(cfg.models), cfg)
        freq = analysis.averaged().selection_frequencies()
        assert abs(freq["normal"] - probs[:, cfg.models.index(N)].mean()) < 0.05

    def test_null_negligible(self, analysis):
        cfg = AveragingConfig.equal([N, B, S, Model.NULL])
        probs = posterior_model_probs(analysis.aligned(cfg.models), cfg)
        assert probs[:, 3].mean() < 1e-4
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_typical_city(self, analysis):
        typ = analysis.typical()
        cfg = AveragingConfig.equal([N, B])
        p_normal = posterior_model_probs(analysis.aligned([N, B]), cfg)[:, 0]
        assert abs(typ["_use_normal"].mean() - p_normal.mean()) < 0.05
        used = np.where(typ["_use_normal"], typ["normal"], typ["beta"])
        np.testing.assert_array_equal(typ["averaged"], used)

    def test_typical_rejects_saturated(self, analysis):
        typ = analysis.typical()
        with pytest.raises(ValueError):
            averaged_typical_city(typ["normal"], typ["beta"], analysis.aligned([N, B]),
                                  AveragingConfig.equal([N, S]), seed=1)
