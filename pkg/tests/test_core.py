import numpy as np
import pytest
from hypothesis import given, strategies as st

from imocp.core import (CalibrationConfig, FeedbackEvent, PredictionInterval, ScoreRangeError,
                        StreamRecord, check_score, hindsight_quantile, miscoverage_indicator,
                        quantile_loss, quantile_loss_array)
from oracles import pinball_sum_grid

reals = st.floats(-10, 10, allow_nan=False)
alphas = st.floats(0.01, 0.99)


class TestQuantileLoss:
    @pytest.mark.parametrize("r, r_star, expected", [
        (0.5, 0.3, 0.02),
        (0.3, 0.3, 0.0),
        (0.2, 0.5, 0.27),
    ])
    def test_examples(self, r, r_star, expected):
        assert quantile_loss(r, r_star, 0.1) == pytest.approx(expected, abs=1e-15)

    @given(reals, reals, alphas)
    def test_nonnegative_and_zero_only_at_target(self, r, r_star, alpha):
        loss = quantile_loss(r, r_star, alpha)
        assert loss >= 0.0
        if r != r_star:
            assert loss > 0.0

    @given(reals, reals, reals, st.floats(0, 1), alphas)
    def test_convex(self, r1, r2, r_star, lam, alpha):
        mid = lam * r1 + (1 - lam) * r2
        lhs = quantile_loss(mid, r_star, alpha)
        rhs = lam * quantile_loss(r1, r_star, alpha) + (1 - lam) * quantile_loss(r2, r_star, alpha)
        assert lhs <= rhs + 1e-12

    def test_derivative_matches_indicator(self):
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(200):
            r, r_star, alpha = rng.uniform(-1, 2), rng.uniform(0, 1), rng.uniform(0.05, 0.95)
            if abs(r - r_star) < 10 * h:
                continue
            fd = (quantile_loss(r + h, r_star, alpha) - quantile_loss(r - h, r_star, alpha)) / (2 * h)
            assert fd == pytest.approx(alpha - miscoverage_indicator(r, r_star), abs=1e-8)

    def test_array_version_agrees(self):
        rng = np.random.default_rng(0)
        r, s = rng.uniform(size=50), rng.uniform(size=50)
        expected = [quantile_loss(a, b, 0.2) for a, b in zip(r, s)]
        np.testing.assert_allclose(quantile_loss_array(r, s, 0.2), expected, rtol=0, atol=0)


class TestMiscoverage:
    @pytest.mark.parametrize("threshold, score, expected", [(0.5, 0.6, 1), (0.5, 0.5, 0), (0.5, 0.1, 0)])
    def test_examples(self, threshold, score, expected):
        assert miscoverage_indicator(threshold, score) == expected

    @given(reals, reals, reals)
    def test_monotone_in_threshold(self, a, b, score):
        lo, hi = sorted((a, b))
        assert miscoverage_indicator(hi, score) <= miscoverage_indicator(lo, score)


class TestHindsightQuantile:
    def test_order_statistic(self):
        assert hindsight_quantile(np.arange(1, 11), 0.1) == 9

    def test_grid_oracle_for_ten_scores(self):
        scores = np.arange(1.0, 11.0)
        grid = np.round(np.arange(0, 11.00001, 0.001), 6)
        obj = pinball_sum_grid(grid, scores, 0.1)
        best = grid[obj <= obj.min() + 1e-9]
        # the minimising set is [9, 10]; we return its left end
        assert best[0] == 9.0 and best[-1] == 10.0

    def test_single_and_degenerate(self):
        assert hindsight_quantile([0.37], 0.5) == 0.37
        assert hindsight_quantile([0, 0, 0], 0.1) == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            hindsight_quantile([], 0.1)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0.05, 0.95))
    def test_beats_grid(self, scores, alpha):
        q = hindsight_quantile(scores, alpha)
        grid = np.arange(min(scores), max(scores) + 1e-4, 1e-4)
        best = pinball_sum_grid(grid, scores, alpha).min()
        assert pinball_sum_grid([q], scores, alpha)[0] <= best + 1e-9


class TestTypes:
    def test_config_defaults(self):
        cfg = CalibrationConfig(alpha=0.1)
        assert cfg.r_init == pytest.approx(0.9)
        assert cfg.score_bound == 1.0

    @pytest.mark.parametrize("kwargs", [dict(alpha=0.0), dict(alpha=1.0), dict(alpha=0.1, score_bound=0),
                                        dict(alpha=0.1, horizon=0)])
    def test_config_rejects(self, kwargs):
        with pytest.raises(ValueError):
            CalibrationConfig(**kwargs)

    def test_event_invariants(self):
        assert FeedbackEvent(False, 0.3).weight == 0.0
        assert FeedbackEvent(True, 0.25, error=1).weight == 4.0
        with pytest.raises(ValueError):
            FeedbackEvent(False, 0.5, error=1)
        with pytest.raises(ValueError):
            FeedbackEvent(True, 0.5)
        with pytest.raises(ValueError):
            FeedbackEvent(True, 0.0, error=0)
        with pytest.raises(ValueError):
            FeedbackEvent(True, 0.5, error=2)

    def test_interval(self):
        iv = PredictionInterval(10.0, 2.0)
        assert iv.contains(12.0) and iv.contains(8.0) and not iv.contains(12.0001)
        assert PredictionInterval.from_threshold(1.0, -0.3).radius == 0.0

    def test_record_consistency(self):
        StreamRecord(1, 0.5, 0.7, 1, True, 1.0, 0.18)
        with pytest.raises(ValueError):
            StreamRecord(1, 0.5, 0.7, 0, True, 1.0, 0.18)

    def test_score_range(self):
        assert check_score(1.0, 1.0) == 1.0
        with pytest.raises(ScoreRangeError):
            check_score(1.01, 1.0)
        with pytest.raises(ScoreRangeError):
            check_score(-0.01, 1.0)
