"""Built-in player personas and five-level trait discretization."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

LEVELS = ("low", "medium-low", "medium", "medium-high", "high")
LEVEL_RANK = {name: i for i, name in enumerate(LEVELS)}


def discretize_trait(value: float, quintile_bounds: Sequence[float]) -> str:
    """Bucket ``value`` into one of five levels; buckets are left-closed."""
    bounds = list(quintile_bounds)
    if len(bounds) != 4 or any(b >= c for b, c in zip(bounds, bounds[1:])):
        raise ValueError("need 4 strictly ascending bounds")
    return LEVELS[bisect.bisect_right(bounds, value)]


def quintile_bounds(values: Sequence[float]) -> tuple[float, ...]:
    """Population quintile cut points (20/40/60/80 %)."""
    return tuple(float(q) for q in np.quantile(np.asarray(values, dtype=float), [0.2, 0.4, 0.6, 0.8]))


@dataclass(frozen=True)
class AgentProfile:
    name: str
    profile_text: str
    trait_levels: Mapping[str, str] = field(default_factory=dict)
    spawn_weight: float = 0.2

    def level(self, trait: str) -> int:
        return LEVEL_RANK[self.trait_levels.get(trait, "medium")]

    @property
    def spend_inclined(self) -> bool:
        return self.level("recharge_money") >= LEVEL_RANK["medium"]

    @property
    def grind_inclined(self) -> bool:
        return self.level("online_time") >= LEVEL_RANK["medium-high"]


def _traits(online: str, money: str, activity: str) -> dict[str, str]:
    return {"online_time": online, "recharge_money": money, "activity_amount": activity}


DEFAULT_PROFILES: tuple[AgentProfile, ...] = (
    AgentProfile(
        "Engaged Grinder",
        "You play a lot and put your hours into the game instead of your wallet. "
        "You like trading and any activity that pays off in time rather than money. "
        "(Lots of time, very little money.)",
        _traits("high", "low", "high"),
    ),
    AgentProfile(
        "Moderate Player",
        "You split your investment in the game between time and money. You are fairly active, "
        "keep your character in good shape, and will pay a moderate amount to make progress "
        "smoother, but recharging is not your main route forward. (Some time, some money.)",
        _traits("medium", "medium", "medium"),
    ),
    AgentProfile(
        "Spending Enthusiast",
        "You are very active and care about managing your resources well. Paying real money to "
        "get ahead does not bother you; you mix long play sessions with regular purchases. "
        "(Lots of time, lots of money.)",
        _traits("high", "high", "high"),
    ),
    AgentProfile(
        "Casual Gamer",
        "The game is a low-priority pastime for you. You log in now and then, hold modest "
        "resources, and rarely think about recharging. (Little time, little money.)",
        _traits("low", "low", "low"),
    ),
    AgentProfile(
        "Steady Participant",
        "You play at an even pace without pouring much time or money into the game. "
        "Your activity is moderate and you would rather not pay for purchases; "
        "you enjoy the game without hurrying. (Some time, little money.)",
        _traits("medium", "low", "medium"),
    ),
)

PROFILES_BY_NAME = {p.name: p for p in DEFAULT_PROFILES}


def normalize_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or (w < 0).any() or w.sum() <= 0:
        raise ValueError("profile weights must be non-negative with a positive sum")
    if not np.isclose(w.sum(), 1.0):
        raise ValueError(f"profile weights must sum to 1, got {w.sum()}")
    return w / w.sum()


def assign_profiles(n_agents: int, weights: Sequence[float] | None, rng: np.random.Generator,
                    profiles: Sequence[AgentProfile] = DEFAULT_PROFILES) -> list[AgentProfile]:
    if weights is None:
        weights = [p.spawn_weight for p in profiles]
    w = normalize_weights(weights)
    if len(w) != len(profiles):
        raise ValueError("one weight per profile required")
    idx = rng.choice(len(profiles), size=n_agents, p=w)
    return [profiles[i] for i in idx]
