import numpy as np
import pytest

from imocp.core import StreamRecord, hindsight_quantile, quantile_loss
from imocp.metrics import (MetricsAccumulator, TheoryConstants, corollary1_rates,
                           fit_miscoverage_decay, fit_power_law, max_bregman_to_comparator,
                           miscoverage_rate, regret, theorem1_bound, theorem2_bound)
from imocp.priors import Regularizer, Uniform
from oracles import pinball_sum_grid

ALPHA = 0.1


def records(thresholds, scores, observed=None, probs=None, alpha=ALPHA):
    n = len(scores)
    observed = [True] * n if observed is None else observed
    probs = [1.0] * n if probs is None else probs
    return [StreamRecord(t + 1, r, s, int(s > r), o, p, quantile_loss(r, s, alpha))
            for t, (r, s, o, p) in enumerate(zip(thresholds, scores, observed, probs))]


def consts(**kw):
    base = dict(L=1.5, mu=0.5, B=1.0, p_min=0.5, eta_1=0.1, eta_T=0.1)
    base.update(kw)
    return TheoryConstants(**base)


class TestMiscoverage:
    def test_examples(self):
        assert miscoverage_rate(records([1.0] * 10, [0.5] * 10), 0.1) == pytest.approx(0.1)
        scores = [0.9] + [0.1] * 9
        assert miscoverage_rate(records([0.5] * 10, scores), 0.1) == pytest.approx(0.0, abs=1e-15)
        alt = [0.9, 0.1] * 5
        assert miscoverage_rate(records([0.5] * 10, alt, alpha=0.5), 0.5) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            miscoverage_rate([], 0.1)


class TestRegret:
    def test_comparator_trajectory_is_zero(self):
        s = np.random.default_rng(0).uniform(size=30)
        q = hindsight_quantile(s, ALPHA)
        assert regret(records([q] * 30, s), ALPHA) == pytest.approx(0.0, abs=1e-12)

    def test_single_round(self):
        assert regret(records([0.4], [0.4]), ALPHA) == pytest.approx(0.0)

    def test_grid_comparator(self):
        rng = np.random.default_rng(1)
        s, r = rng.uniform(size=25), rng.uniform(size=25)
        grid = np.arange(0, 1 + 5e-7, 1e-6)
        best = pinball_sum_grid(grid, s, ALPHA).min()
        online = sum(quantile_loss(a, b, ALPHA) for a, b in zip(r, s))
        assert regret(records(r, s), ALPHA) == pytest.approx(online - best, abs=1e-6)

    def test_weighted_equals_unweighted_at_full_feedback(self):
        rng = np.random.default_rng(2)
        recs = records(rng.uniform(size=50), rng.uniform(size=50))
        assert regret(recs, ALPHA, weighted=True) == regret(recs, ALPHA, weighted=False)

    def test_weighted(self):
        recs = records([0.5, 0.5], [0.9, 0.1], observed=[True, False], probs=[0.25, 0.5])
        q = hindsight_quantile([0.9, 0.1], ALPHA)
        comp = quantile_loss(q, 0.9, ALPHA) + quantile_loss(q, 0.1, ALPHA)
        assert regret(recs, ALPHA, weighted=True) == pytest.approx(4 * 0.36 - comp)


class TestBounds:
    def test_miscoverage_bound_example(self):
        assert theorem1_bound(consts(), 1000) == pytest.approx(0.021, rel=1e-12)

    def test_miscoverage_bound_decreasing_and_rate(self):
        c = consts()
        assert theorem1_bound(c, 2000) < theorem1_bound(c, 1000)
        ratio = []
        for T in (100, 10_000):
            ratio.append(theorem1_bound(consts(eta_1=1.0, eta_T=T ** -0.5), T))
        assert ratio[0] / ratio[1] == pytest.approx(10.0, rel=0.01)

    def test_regret_bound_example(self):
        assert theorem2_bound(consts(D_T=0.1), np.full(100, 0.1)) == pytest.approx(21.0)

    def test_regret_bound_zero_divergence(self):
        etas = np.arange(1, 51) ** -0.5
        assert theorem2_bound(consts(D_T=0.0), etas) == pytest.approx(etas.sum() / 0.5)

    def test_regret_bound_sqrt_growth(self):
        vals = [theorem2_bound(consts(D_T=0.1), np.arange(1, T + 1) ** -0.5) for T in (10**3, 10**5)]
        _, k = fit_power_law([10**3, 10**5], vals)
        assert k == pytest.approx(0.5, abs=0.02)

    def test_corollary_rates(self):
        assert corollary1_rates(0.5) == (0.5, 0.5)
        assert corollary1_rates(0.25) == (0.75, 0.75)
        g, k = corollary1_rates(1 - 1e-12)
        assert g == pytest.approx(0.0, abs=1e-9) and k == pytest.approx(1.0)
        with pytest.raises(ValueError):
            corollary1_rates(1.0)

    def test_from_run(self):
        reg = Regularizer(Uniform(1.0), ALPHA, 0.5)
        c = TheoryConstants.from_run(reg, [0.3, 0.2, 0.1], 0.5, D_T=0.7)
        assert (c.L, c.mu, c.eta_1, c.eta_T, c.D_T) == (1.5, 0.5, 0.3, 0.1, 0.7)

    def test_bregman_comparator_within_smoothness_bound(self, regularizer):
        rs = np.linspace(-0.2, 1.3, 40)
        d = max_bregman_to_comparator(regularizer, rs, 0.9)
        L = regularizer.smooth_l
        assert 0 < d <= 0.5 * L * max((0.9 - r) ** 2 for r in rs) + 1e-12


class TestFits:
    def test_power_law_exact(self):
        x = np.array([10.0, 100.0, 1000.0])
        a, k = fit_power_law(x, 3.0 * x ** -0.5)
        assert a == pytest.approx(3.0) and k == pytest.approx(-0.5)

    def test_miscoverage_decay_on_deterministic_pattern(self):
        e = np.tile([1] + [0] * 9, 1000)
        a, gamma = fit_miscoverage_decay(e, 0.1)
        assert np.isfinite(a) and gamma > 0.5


class TestAccumulator:
    def test_add_and_merge(self):
        rng = np.random.default_rng(3)
        recs = records(rng.uniform(size=20), rng.uniform(size=20),
                       observed=list(rng.uniform(size=20) < 0.5), probs=[0.5] * 20)
        whole, a, b = MetricsAccumulator(), MetricsAccumulator(), MetricsAccumulator()
        for i, rec in enumerate(recs):
            whole.add(rec)
            (a if i < 8 else b).add(rec)
        merged = a + b
        assert merged.rounds == whole.rounds == 20
        assert merged.error_count == whole.error_count
        assert merged.cumulative_loss == pytest.approx(whole.cumulative_loss)
        assert merged.weighted_cumulative_loss == pytest.approx(whole.weighted_cumulative_loss)
        assert merged.score_log == whole.score_log
        assert whole.error_rate == pytest.approx(np.mean([r.error for r in recs]))

    def test_associative(self):
        parts = [MetricsAccumulator(1, 0.5, 1.0, 3), MetricsAccumulator(0, 0.25, 0.0, 2),
                 MetricsAccumulator(2, 1.0, 2.0, 4)]
        left = (parts[0] + parts[1]) + parts[2]
        right = parts[0] + (parts[1] + parts[2])
        assert left == right
