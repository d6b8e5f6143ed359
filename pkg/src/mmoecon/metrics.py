"""Run-level evaluation metrics.

Capability and diversity score individual play; profitability, equality,
venue price means, the demand-supply gap and its price correlation describe
the economy as a whole.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .actions import ACTION_KINDS
from .market import BookSummary, Trade, Venue

log = logging.getLogger(__name__)

CONSISTENCY_WINDOW = 15


class EmptyHistogram(ValueError):
    pass


class DegenerateSeries(ValueError):
    pass


class UnparseableRating(ValueError):
    pass


@dataclass
class RunMetrics:
    """What one repetition leaves behind for evaluation."""

    steps: int
    final_cap: dict[int, int]
    ccy_spent: dict[int, int]
    action_histogram: dict[int, dict[str, int]]
    auction_prices: list[tuple[int, float]] = field(default_factory=list)  # (step, mean trade price)
    p2p_prices: list[tuple[int, float]] = field(default_factory=list)
    gap_series: list[tuple[int, int]] = field(default_factory=list)  # (step, bids - asks)
    trades: list[Trade] = field(default_factory=list)
    profiles: dict[int, str] = field(default_factory=dict)

    def check(self) -> None:
        for agent, hist in self.action_histogram.items():
            if sum(hist.values()) != self.steps:
                raise AssertionError(f"agent {agent} histogram total != {self.steps}")
        for series in (self.auction_prices, self.p2p_prices, self.gap_series):
            if len(series) > self.steps:
                raise AssertionError("series longer than the run")

    def summary(self) -> dict[str, float | None]:
        means = venue_price_means(self.trades)
        try:
            corr = pearson(*aligned_price_gap(self.auction_prices, self.gap_series))
        except DegenerateSeries:
            corr = None
        return {
            "capability": capability_mean(self),
            "diversity": mean_diversity(self),
            "profitability": profitability(self),
            "equality": equality(self),
            "auction_mean_price": means["auction_mean"],
            "p2p_mean_price": means["p2p_mean"],
            "price_gap_pearson": corr,
            "auction_trades": float(sum(1 for t in self.trades if t.venue is Venue.AUCTION)),
            "p2p_trades": float(sum(1 for t in self.trades if t.venue is Venue.P2P)),
        }


def capability_mean(metrics: RunMetrics | Sequence[RunMetrics]) -> float:
    """Mean final CAP over agents, then over repetitions."""
    runs = [metrics] if isinstance(metrics, RunMetrics) else list(metrics)
    if not runs:
        raise ValueError("no runs")
    return float(np.mean([np.mean(list(r.final_cap.values())) for r in runs]))


def diversity_entropy(histogram: Mapping[str, int] | Sequence[int]) -> float:
    """Shannon entropy (nats) of an action histogram, with 0 ln 0 = 0."""
    counts = np.asarray(list(histogram.values()) if isinstance(histogram, Mapping) else histogram, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise EmptyHistogram("histogram has no entries")
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def mean_diversity(metrics: RunMetrics | Sequence[RunMetrics]) -> float:
    runs = [metrics] if isinstance(metrics, RunMetrics) else list(metrics)
    return float(np.mean([
        np.mean([diversity_entropy(h) for h in r.action_histogram.values()]) for r in runs
    ]))


def profitability(metrics: RunMetrics) -> float:
    """Mean CCY spent per player."""
    spent = list(metrics.ccy_spent.values())
    return float(sum(spent)) / len(spent)


def gini(values: Sequence[float]) -> float:
    """Pairwise mean-difference Gini: sum_i sum_j |x_i - x_j| / (2 N sum x)."""
    x = np.asarray(values, dtype=float)
    total = x.sum()
    if total == 0:
        return 0.0
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * len(x) * total))


def equality(metrics: RunMetrics | Sequence[float]) -> float:
    """``1 - Gini * N / (N - 1)`` over final capability. All-zero or single
    agent populations count as perfectly equal."""
    caps = list(metrics.final_cap.values()) if isinstance(metrics, RunMetrics) else list(metrics)
    n = len(caps)
    if n < 2 or sum(caps) == 0:
        return 1.0
    return 1.0 - gini(caps) * n / (n - 1)


def demand_supply_gap(summary: BookSummary) -> int:
    """Bid-order count minus ask-order count; positive means undersupplied."""
    return summary.bid_count - summary.ask_count


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateSeries("series must be 1-D and of equal length")
    if len(x) < 2:
        raise DegenerateSeries("need at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateSeries("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def per_step_mean_prices(trades: Iterable[Trade], venue: Venue) -> list[tuple[int, float]]:
    by_step: dict[int, list[int]] = {}
    for t in trades:
        if t.venue is venue:
            by_step.setdefault(t.step, []).append(t.price)
    return [(s, float(np.mean(p))) for s, p in sorted(by_step.items())]


def aligned_price_gap(prices: Sequence[tuple[int, float]],
                      gaps: Sequence[tuple[int, int]]) -> tuple[list[float], list[float]]:
    """Pair every gap observation with the latest trade price at or before its
    step (carry forward). Steps before the first trade are dropped."""
    price_at = dict(prices)
    out_p, out_g = [], []
    last = None
    for step, gap in sorted(gaps):
        if step in price_at:
            last = price_at[step]
        if last is not None:
            out_p.append(last)
            out_g.append(float(gap))
    return out_p, out_g


def venue_price_means(trades: Iterable[Trade]) -> dict[str, float | None]:
    prices: dict[Venue, list[int]] = {Venue.AUCTION: [], Venue.P2P: []}
    for t in trades:
        prices[t.venue].append(t.price)
    return {
        "auction_mean": float(np.mean(prices[Venue.AUCTION])) if prices[Venue.AUCTION] else None,
        "p2p_mean": float(np.mean(prices[Venue.P2P])) if prices[Venue.P2P] else None,
    }


def empty_histogram() -> dict[str, int]:
    return {k.value: 0 for k in ACTION_KINDS}


# --- profile consistency (judged by a chat backend) ---------------------------

RATING_RUBRIC = (
    "Rate how well the decision sequence matches the player profile on a 5-point scale:\n"
    "5 - perfect match: every decision is what this player would plausibly do.\n"
    "4 - good match: nearly all decisions fit, with minor deviations.\n"
    "3 - partial match: some decisions fit the profile and some do not.\n"
    "2 - poor match: most decisions contradict the profile.\n"
    "1 - total mismatch: the sequence is inconsistent with the profile throughout.\n"
    "Answer with a single integer from 1 to 5."
)

_RATING_RE = re.compile(r"\b([1-5])\b")


def parse_rating(text: str) -> int:
    m = _RATING_RE.search(text or "")
    if m is None:
        raise UnparseableRating(f"no rating in {text[:80]!r}")
    return int(m.group(1))


def consistency_rating(decisions: Sequence[Any], profile_text: str,
                       judge: Callable[[list[dict[str, str]]], str] | Any,
                       window: int = CONSISTENCY_WINDOW,
                       warnings: list[str] | None = None) -> float:
    """Average 1-5 judge rating over consecutive ``window``-step subsequences.

    ``judge`` is a callable taking chat messages, or any object with a
    ``complete(messages)`` method. A trailing partial window is not judged.
    """
    ask = judge.complete if hasattr(judge, "complete") else judge
    warnings = [] if warnings is None else warnings
    scores = []
    for start in range(0, len(decisions) - window + 1, window):
        chunk = decisions[start:start + window]
        listing = "\n".join(f"{start + i + 1}. {d}" for i, d in enumerate(chunk))
        messages = [
            {"role": "system", "content": "You evaluate whether game players behave consistently with their profiles."},
            {"role": "user", "content": f"Player profile:\n{profile_text}\n\nDecision sequence:\n{listing}\n\n{RATING_RUBRIC}"},
        ]
        try:
            scores.append(parse_rating(ask(messages)))
        except UnparseableRating as exc:
            warnings.append(f"subsequence at {start} skipped: {exc}")
            log.warning("consistency rating skipped: %s", exc)
    if not scores:
        raise UnparseableRating("no subsequence could be rated")
    return float(np.mean(scores))
