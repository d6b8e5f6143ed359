from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mmoecon.market import BookSummary, Trade, Venue
from mmoecon.metrics import (
    DegenerateSeries, EmptyHistogram, RunMetrics, UnparseableRating, aligned_price_gap,
    capability_mean, consistency_rating, demand_supply_gap, diversity_entropy, empty_histogram,
    equality, gini, mean_diversity, parse_rating, pearson, per_step_mean_prices, profitability,
    venue_price_means,
)

from oracles import gini_double_sum, pearson_direct


def run_metrics(caps, spent=None, steps=1):
    n = len(caps)
    hist = {i: {**empty_histogram(), "Task": steps} for i in range(n)}
    return RunMetrics(steps, dict(enumerate(caps)), dict(enumerate(spent or [0] * n)), hist)


def summary(bids, asks):
    return BookSummary(None, None, (), (), bids, asks)


def gini_sorted(values):
    x = sorted(values)
    n = len(x)
    return sum((2 * (i + 1) - n - 1) * v for i, v in enumerate(x)) / (n * sum(x))


class TestCapability:
    def test_examples(self):
        assert capability_mean(run_metrics([100, 140])) == 120
        assert capability_mean(run_metrics([0, 0, 0])) == 0
        assert capability_mean(run_metrics([37])) == 37

    def test_mean_over_repetitions(self):
        assert capability_mean([run_metrics([10, 20]), run_metrics([30])]) == 22.5


class TestDiversity:
    def test_uniform_is_ln7(self):
        assert abs(diversity_entropy([5] * 7) - math.log(7)) < 1e-12

    def test_single_kind(self):
        assert diversity_entropy({"Task": 9}) == 0.0

    def test_two_halves(self):
        assert abs(diversity_entropy([4, 4, 0, 0, 0, 0, 0]) - math.log(2)) < 1e-12

    def test_empty(self):
        with pytest.raises(EmptyHistogram):
            diversity_entropy([0] * 7)

    @given(st.lists(st.integers(0, 50), min_size=7, max_size=7).filter(lambda c: sum(c) > 0))
    def test_bounded_by_ln7(self, counts):
        h = diversity_entropy(counts)
        assert -1e-12 <= h <= math.log(7) + 1e-12
        if len(set(counts)) > 1:
            assert h < math.log(7) - 1e-12

    def test_mean_diversity(self):
        m = run_metrics([1, 1], steps=7)
        m.action_histogram[1] = {k: 1 for k in empty_histogram()}
        assert mean_diversity(m) == pytest.approx(math.log(7) / 2)


class TestProfitabilityEquality:
    def test_profitability(self):
        assert profitability(run_metrics([0, 0], [3, 5])) == 4
        assert profitability(run_metrics([0, 0], [0, 0])) == 0
        assert profitability(run_metrics([0], [7])) == 7

    def test_equal_caps(self):
        assert gini([12, 12, 12]) == 0
        assert equality([12, 12, 12]) == 1.0

    @pytest.mark.parametrize("x", [1, 7, 250])
    def test_two_player_extreme(self, x):
        assert gini([0, x]) == 0.5
        assert equality([0, x]) == 0.0

    def test_three_players(self):
        g = gini_double_sum([10, 10, 40])
        assert gini([10, 10, 40]) == pytest.approx(g, abs=1e-15)
        assert equality([10, 10, 40]) == pytest.approx(1 - g * 1.5, abs=1e-15)

    def test_all_zero_is_equal(self):
        assert equality([0, 0, 0]) == 1.0
        assert equality(run_metrics([5])) == 1.0

    @settings(max_examples=300)
    @given(st.lists(st.integers(0, 10_000), min_size=2, max_size=40))
    def test_equality_range_and_gini_forms(self, caps):
        assume(sum(caps) > 0)
        assert gini(caps) == pytest.approx(gini_double_sum(caps), abs=1e-12)
        assert gini(caps) == pytest.approx(gini_sorted(caps), abs=1e-12)
        assert -1e-12 <= equality(caps) <= 1 + 1e-12


class TestGapAndPearson:
    def test_gap(self):
        assert demand_supply_gap(summary(3, 1)) == 2
        assert demand_supply_gap(summary(0, 0)) == 0
        assert demand_supply_gap(summary(0, 4)) == -4

    def test_perfect(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == 1.0
        assert pearson([1, 2, 3], [-1, -2, -3]) == -1.0

    def test_against_oracle(self):
        assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - pearson_direct([1, 2, 3, 4], [1, 3, 2, 4])) < 1e-12

    def test_random_series_match_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            n = int(rng.integers(2, 60))
            x, y = rng.normal(size=n).tolist(), rng.normal(size=n).tolist()
            assert abs(pearson(x, y) - pearson_direct(x, y)) < 1e-12

    @pytest.mark.parametrize("x,y", [([1], [1]), ([1, 1, 1], [1, 2, 3]), ([1, 2], [1, 2, 3])])
    def test_degenerate(self, x, y):
        with pytest.raises(DegenerateSeries):
            pearson(x, y)

    def test_alignment_carries_forward(self):
        prices = [(2, 6.0), (5, 8.0)]
        gaps = [(0, 1), (1, 0), (2, 3), (3, 2), (4, -1), (5, 4)]
        assert aligned_price_gap(prices, gaps) == ([6.0, 6.0, 6.0, 8.0], [3.0, 2.0, -1.0, 4.0])
        assert aligned_price_gap([], gaps) == ([], [])


class TestPrices:
    def test_venue_means(self):
        trades = [Trade(0, 1, 2, p, Venue.AUCTION) for p in (6, 7, 8)]
        assert venue_price_means(trades) == {"auction_mean": 7.0, "p2p_mean": None}
        assert venue_price_means([Trade(3, 0, 1, 5, Venue.P2P)])["p2p_mean"] == 5.0

    def test_per_step_means(self):
        trades = [Trade(1, 0, 1, 4, Venue.AUCTION), Trade(1, 0, 1, 6, Venue.AUCTION),
                  Trade(3, 0, 1, 9, Venue.AUCTION), Trade(2, 0, 1, 1, Venue.P2P)]
        assert per_step_mean_prices(trades, Venue.AUCTION) == [(1, 5.0), (3, 9.0)]

    def test_summary_and_check(self):
        m = run_metrics([4, 8], [1, 0], steps=3)
        m.trades = [Trade(0, 0, 1, 5, Venue.AUCTION)]
        m.check()
        s = m.summary()
        assert s["capability"] == 6 and s["auction_trades"] == 1 and s["price_gap_pearson"] is None
        m.action_histogram[0]["Task"] = 2
        with pytest.raises(AssertionError):
            m.check()


class TestConsistency:
    decisions = [f"Task at step {i}" for i in range(30)]

    def test_constant_judge(self):
        calls = []
        judge = lambda msgs: calls.append(msgs) or "4"
        assert consistency_rating(self.decisions, "a grinder", judge) == 4.0
        assert len(calls) == 2
        assert "a grinder" in calls[0][1]["content"] and "1 to 5" in calls[0][1]["content"]

    def test_alternating(self):
        answers = iter(["Rating: 3", "5 - perfect match"])
        assert consistency_rating(self.decisions, "p", lambda m: next(answers)) == 4.0

    def test_partial_window_not_judged(self):
        calls = []
        consistency_rating(self.decisions[:29], "p", lambda m: calls.append(1) or "2")
        assert len(calls) == 1

    def test_unparseable_skipped(self):
        answers = iter(["no idea", "2"])
        warnings = []
        assert consistency_rating(self.decisions, "p", lambda m: next(answers), warnings=warnings) == 2.0
        assert len(warnings) == 1
        with pytest.raises(UnparseableRating):
            consistency_rating(self.decisions, "p", lambda m: "n/a")

    def test_parse(self):
        assert parse_rating("I'd say 4.") == 4
        with pytest.raises(UnparseableRating):
            parse_rating("seven")

    def test_object_judge(self):
        class Judge:
            def complete(self, messages):
                return "5"
        assert consistency_rating(self.decisions, "p", Judge()) == 5.0
