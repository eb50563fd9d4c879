"""Network scoring: EWMA, base score, penalties, and composition."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from sonarsim.config import ConfigError
from sonarsim.netscore import (
    NetworkScoreBreakdown,
    ScoringParams,
    base_score,
    compose_final,
    ewma_predict,
    penalty_high,
    penalty_instability,
    penalty_outage,
    penalty_trend,
    score_latency_history,
)

DEFAULTS = ScoringParams()


class TestEwma:
    def test_constant_history_is_fixed_point(self):
        assert ewma_predict([42.0] * 25, 0.3) == pytest.approx(42.0)

    def test_two_samples(self):
        assert ewma_predict([0.0, 100.0], 0.3) == pytest.approx(30.0)

    def test_single_sample_initialization(self):
        assert ewma_predict([42.0], 0.3) == 42.0

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            ewma_predict([], 0.3)

    @given(
        st.lists(st.floats(min_value=1, max_value=5000), min_size=1, max_size=50),
        st.floats(min_value=0.05, max_value=1.0),
    )
    def test_bounded_by_history_extremes(self, history, lam):
        predicted = ewma_predict(history, lam)
        assert min(history) - 1e-9 <= predicted <= max(history) + 1e-9


class TestBaseScore:
    def test_inside_ideal_band(self):
        assert base_score(30.0, DEFAULTS) == 1.0

    def test_boundary(self):
        assert base_score(50.0, DEFAULTS) == 1.0

    def test_decay_beyond_band(self):
        assert base_score(350.0, DEFAULTS) == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_below_band_not_penalized(self):
        assert base_score(5.0, DEFAULTS) == 1.0


class TestPenalties:
    def test_high_inside_band(self):
        assert penalty_high(40.0, DEFAULTS) == 0.0

    def test_high_at_offline_threshold(self):
        assert penalty_high(1000.0, DEFAULTS) == 1.0

    def test_high_midpoint(self):
        assert penalty_high(525.0, DEFAULTS) == pytest.approx(0.5)

    def test_trend_constant_window(self):
        assert penalty_trend([100.0] * 10, DEFAULTS) == 0.0

    def test_trend_decreasing_clamps_to_zero(self):
        assert penalty_trend([190.0 - 10 * i for i in range(10)], DEFAULTS) == 0.0

    def test_trend_linear_rise(self):
        window = [100.0 + 10 * i for i in range(10)]
        # least-squares slope 10/tick, projected rise 100, window mean 145
        assert penalty_trend(window, DEFAULTS) == pytest.approx(100 / 145, abs=1e-12)

    def test_trend_short_window(self):
        assert penalty_trend([100.0], DEFAULTS) == 0.0

    def test_outage_none_above(self):
        assert penalty_outage([100.0] * 10, DEFAULTS) == 0.0

    def test_outage_half_above(self):
        window = [900.0] * 5 + [100.0] * 5
        assert penalty_outage(window, DEFAULTS) == 0.5

    def test_outage_all_above(self):
        assert penalty_outage([900.0] * 10, DEFAULTS) == 1.0

    def test_outage_threshold_is_strict(self):
        assert penalty_outage([800.0] * 10, DEFAULTS) == 0.0

    def test_instability_constant(self):
        assert penalty_instability([250.0] * 10, DEFAULTS) == 0.0

    def test_instability_cv(self):
        # mean 100, population std 70 -> CV 0.7
        window = [30.0, 170.0] * 5
        assert penalty_instability(window, DEFAULTS) == pytest.approx(0.7, abs=1e-12)

    def test_instability_clamps_at_one(self):
        # CV of this window is ~1.73, well past cv_ref = 1
        window = [1.0, 1000.0, 1.0, 1.0]
        assert penalty_instability(window, DEFAULTS) == 1.0


class TestScoreHistory:
    def test_constant_thirty_scores_one(self):
        breakdown = score_latency_history([30.0] * 10, DEFAULTS)
        assert breakdown.final == 1.0
        assert not breakdown.offline
        assert breakdown.base_score == 1.0
        assert (breakdown.p_high, breakdown.p_trend, breakdown.p_outage, breakdown.p_instability) == (
            0.0,
            0.0,
            0.0,
            0.0,
        )

    def test_offline_when_last_sample_at_threshold(self):
        breakdown = score_latency_history([30.0] * 9 + [1000.0], DEFAULTS)
        assert breakdown.offline
        assert breakdown.final == -1.0
        # diagnostics still populated
        assert breakdown.p_outage == 0.1

    def test_constant_350_golden(self):
        breakdown = score_latency_history([350.0] * 10, DEFAULTS)
        assert breakdown.predicted_latency_ms == pytest.approx(350.0)
        assert breakdown.base_score == pytest.approx(math.exp(-1.0), abs=1e-9)
        assert breakdown.p_high == pytest.approx(300 / 950, abs=1e-12)
        expected = math.exp(-1.0) * (1 - 0.5 * (300 / 950))
        assert breakdown.final == pytest.approx(expected, abs=1e-12)
        assert breakdown.final == pytest.approx(0.3098, abs=1e-4)

    def test_online_range(self):
        rng = random.Random(5)
        for _ in range(200):
            history = [rng.uniform(1, 999) for _ in range(rng.randint(1, 40))]
            breakdown = score_latency_history(history, DEFAULTS)
            assert 0.0 <= breakdown.final <= 1.0
            assert not breakdown.offline

    def test_offline_exactly_when_last_at_or_above_threshold(self):
        assert score_latency_history([500.0, 999.9], DEFAULTS).offline is False
        assert score_latency_history([500.0, 1000.0], DEFAULTS).offline is True
        assert score_latency_history([1500.0, 30.0], DEFAULTS).offline is False

    def test_constant_within_ideal_band_is_optimal(self):
        for level in (20.0, 35.0, 50.0):
            assert score_latency_history([level] * 15, DEFAULTS).final == 1.0

    def test_appending_equal_samples_leaves_score_unchanged(self):
        history = [120.0] * 12
        first = score_latency_history(history, DEFAULTS)
        extended = score_latency_history(history + [120.0] * 8, DEFAULTS)
        assert first == extended

    def test_cold_start_uses_short_window(self):
        breakdown = score_latency_history([30.0, 31.0], DEFAULTS)
        assert 0.0 <= breakdown.final <= 1.0

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            score_latency_history([], DEFAULTS)


def test_monotone_penalty_effect_random_breakdowns():
    rng = random.Random(99)
    for _ in range(1_000):
        base = rng.uniform(0.0, 1.0)
        weights = tuple(rng.uniform(0.0, 1.0) for _ in range(4))
        penalties = [rng.uniform(0.0, 1.0) for _ in range(4)]
        final = compose_final(base, *penalties, weights)
        idx = rng.randrange(4)
        bumped = list(penalties)
        bumped[idx] = min(1.0, bumped[idx] + rng.uniform(0.0, 1.0))
        assert compose_final(base, *bumped, weights) <= final + 1e-12


def test_params_validation():
    with pytest.raises(ConfigError):
        ScoringParams(ewma_lambda=0.0)
    with pytest.raises(ConfigError):
        ScoringParams(window=1)
    with pytest.raises(ConfigError):
        ScoringParams(ideal_low_ms=60.0)
    with pytest.raises(ConfigError):
        ScoringParams(outage_threshold_ms=1200.0)
    with pytest.raises(ConfigError):
        ScoringParams(weights=(0.5, 0.2, 1.5, 0.3))


def test_params_from_dict_roundtrip():
    params = ScoringParams.from_dict({"ewma_lambda": 0.5, "weights": [0.4, 0.1, 0.9, 0.2]})
    assert params.ewma_lambda == 0.5
    assert params.weights == (0.4, 0.1, 0.9, 0.2)
    with pytest.raises(ConfigError, match="unknown key"):
        ScoringParams.from_dict({"bogus": 1})
