"""Network-free backends: uniform random, the rule-based ladder, and scripts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence, Union

import numpy as np

from ..actions import (
    ACCEPT, ACTION_KINDS, REJECT, RECHARGE, SHOP, TASK, UPGRADE,
    ActionKind, AuctionBuy, AuctionSell, Move, MoveKind, Offer, P2P, StructuredAction,
)
from ..comms import NegotiationSession
from ..agent.profiles import AgentProfile
from .base import Policy, PromptContext

RANDOM_PRICE_RANGE = (1, 10)
REFERENCE_PRICE = 6
_MOVE_KINDS = tuple(MoveKind)


def random_decide(ctx: PromptContext | None, rng: np.random.Generator) -> StructuredAction:
    """Uniform over the seven action kinds; prices uniform on [1, 10]."""
    lo, hi = RANDOM_PRICE_RANGE
    kind = ACTION_KINDS[int(rng.integers(len(ACTION_KINDS)))]
    if kind in (ActionKind.AUCTION_BUY, ActionKind.AUCTION_SELL):
        return StructuredAction(kind, price=int(rng.integers(lo, hi + 1)))
    if kind is ActionKind.P2P:
        move_kind = _MOVE_KINDS[int(rng.integers(len(_MOVE_KINDS)))]
        price = int(rng.integers(lo, hi + 1)) if move_kind in (MoveKind.OFFER, MoveKind.PUBLIC) else None
        return P2P(None, Move(move_kind, price))
    return StructuredAction(kind)


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, rng: np.random.Generator):
        super().__init__()
        self.rng = rng

    def decide(self, ctx: PromptContext) -> StructuredAction:
        return random_decide(ctx, self.rng)

    def negotiate(self, session, ctx) -> Move:
        pick = int(self.rng.integers(3))
        if pick == 0:
            lo, hi = RANDOM_PRICE_RANGE
            return Offer(int(self.rng.integers(lo, hi + 1)))
        return ACCEPT if pick == 1 else REJECT


def _ladder(ctx: PromptContext, profile: AgentProfile, strategy: str):
    """Yield candidate actions in priority order."""
    obs = ctx.observation
    inv, book = obs.inventory, obs.auction
    shop_price = ctx.shop_price
    has_inputs = inv.mat >= 1 and inv.exp >= 1
    missing = (inv.mat < 1) + (inv.exp < 1)

    if has_inputs and inv.tok >= 1:
        yield UPGRADE
    if has_inputs and inv.tok < 1 and inv.ccy >= 1:
        yield RECHARGE  # tokens are the only thing missing
    if obs.nearby:
        yield TASK
    buy_from_book = (
        inv.mat < 1 and book.best_ask is not None and book.best_ask < shop_price
        and inv.tok >= book.best_ask and obs.escrow["tok"] == 0
    )
    if strategy == "trade" and buy_from_book:
        yield AuctionBuy(book.best_ask)
    if profile.spend_inclined:
        need = 1 + shop_price * missing
        if inv.tok < need and inv.ccy >= 1:
            yield RECHARGE
        if buy_from_book:
            yield AuctionBuy(book.best_ask)
        if missing and inv.tok >= shop_price:
            yield SHOP
    if profile.grind_inclined and inv.mat > inv.exp and obs.escrow["mat"] == 0:
        yield AuctionSell(book.best_bid + 1 if book.best_bid is not None else REFERENCE_PRICE)
    yield TASK


def rule_based_decide(ctx: PromptContext, profile: AgentProfile | None = None,
                      strategy: str = "gather") -> StructuredAction:
    """Deterministic priority ladder. On a retry the failed action kind is skipped."""
    profile = profile or ctx.profile
    banned = None
    if ctx.is_retry and ctx.feedback is not None and not ctx.feedback.success:
        banned = ctx.feedback.action.kind
    for action in _ladder(ctx, profile, strategy):
        if action.kind is not banned:
            return action
    return TASK


def rule_based_strategy(window: Sequence[tuple[StructuredAction, Any]]) -> str:
    """'trade' once at least half of the recent observations showed nothing nearby."""
    if not window:
        return "gather"
    empty = sum(1 for _, obs in window if not getattr(obs, "nearby", ()))
    return "trade" if 2 * empty >= len(window) else "gather"


def rule_based_negotiate(session: NegotiationSession | None, ctx: PromptContext) -> Move:
    book = ctx.observation.auction
    if session is None:
        return Offer(book.best_ask or REFERENCE_PRICE)
    me = ctx.agent
    offer = session.current_offer
    if me == session.buyer:
        fair = book.best_ask if book.best_ask is not None else REFERENCE_PRICE
        if offer <= fair and ctx.observation.inventory.tok >= offer:
            return ACCEPT
        return Offer(max(1, (offer + fair) // 2)) if offer > fair + 1 else REJECT
    fair = book.best_bid if book.best_bid is not None else REFERENCE_PRICE
    if offer >= fair and ctx.observation.inventory.mat >= 1:
        return ACCEPT
    return Offer((offer + fair + 1) // 2) if offer + 1 < fair else REJECT


class RuleBasedPolicy(Policy):
    name = "rule"

    def __init__(self, profile: AgentProfile):
        super().__init__()
        self.profile = profile
        self.strategy = "gather"

    def decide(self, ctx: PromptContext) -> StructuredAction:
        return rule_based_decide(ctx, self.profile, self.strategy)

    def reflect(self, window, sr_prev: str) -> str:
        self.strategy = rule_based_strategy(window)
        return self.strategy

    def negotiate(self, session, ctx) -> Move:
        return rule_based_negotiate(session, ctx)


Branch = Union[StructuredAction, Callable[[PromptContext], StructuredAction]]


@dataclass(frozen=True)
class ScriptStep:
    """A scripted action plus what to do when it fails.

    ``on_failure`` maps a substring of the failure reason to the retry action;
    the empty key matches anything. Keys are tried in order. A branch may be a
    callable taking the :class:`PromptContext`.
    """

    action: StructuredAction
    on_failure: Mapping[str, Branch] | Branch | None = None

    def branch(self, ctx: PromptContext) -> StructuredAction | None:
        branches = self.on_failure
        if branches is None:
            return None
        if not isinstance(branches, Mapping):
            return branches(ctx) if callable(branches) and not isinstance(branches, StructuredAction) else branches
        reason = ctx.feedback.reason if ctx.feedback is not None else ""
        for key, choice in branches.items():
            if key in reason:
                return choice(ctx) if callable(choice) and not isinstance(choice, StructuredAction) else choice
        return None


class ScriptedPolicy(Policy):
    """Replays a fixed list of actions, optionally cycling.

    When the script runs out (and ``cycle`` is off) the policy falls back to
    ``Task``. Reflection returns ``strategy`` verbatim.
    """

    name = "scripted"

    def __init__(self, script: Sequence[StructuredAction | ScriptStep], cycle: bool = False,
                 strategy: str = "follow the script", negotiation: Sequence[Move] = ()):
        super().__init__()
        self.steps = [s if isinstance(s, ScriptStep) else ScriptStep(s) for s in script]
        self.cycle = cycle
        self.strategy = strategy
        self.negotiation = list(negotiation)
        self._pos = 0
        self._current: ScriptStep | None = None

    def decide(self, ctx: PromptContext) -> StructuredAction:
        if ctx.is_retry and self._current is not None:
            alt = self._current.branch(ctx)
            return alt if alt is not None else self._current.action
        if self._pos >= len(self.steps):
            if not self.cycle or not self.steps:
                self._current = None
                return TASK
            self._pos = 0
        self._current = self.steps[self._pos]
        self._pos += 1
        return self._current.action

    def reflect(self, window, sr_prev: str) -> str:
        return self.strategy

    def negotiate(self, session, ctx) -> Move:
        if self.negotiation:
            return self.negotiation.pop(0)
        return ACCEPT if session is not None else Offer(REFERENCE_PRICE)


# --- persona scripts ----------------------------------------------------------

def _pay_to_win_acquire(ctx: PromptContext) -> StructuredAction:
    obs = ctx.observation
    inv = obs.inventory
    if inv.mat >= 1 and inv.exp >= 1:
        return RECHARGE  # only tokens missing
    if obs.nearby:
        return TASK
    if inv.tok >= ctx.shop_price:
        return SHOP
    if inv.ccy >= 1:
        return RECHARGE
    return TASK


def grinder_script() -> ScriptedPolicy:
    """Upgrade whenever possible, otherwise collect; pays only when tokens alone block an upgrade."""
    return ScriptedPolicy(
        [ScriptStep(UPGRADE, {"insufficient TOK": RECHARGE, "": TASK})],
        cycle=True, strategy="grind resources on the map",
    )


def pay_to_win_script() -> ScriptedPolicy:
    """Upgrade whenever possible; collect what is in sight, otherwise buy from the shop with recharged tokens."""
    return ScriptedPolicy(
        [ScriptStep(UPGRADE, _pay_to_win_acquire)],
        cycle=True, strategy="pay to progress when the map runs dry",
    )


PERSONA_SCRIPTS: dict[str, Callable[[], ScriptedPolicy]] = {
    "grinder": grinder_script,
    "pay_to_win": pay_to_win_script,
}


def default_persona(profile: AgentProfile) -> str:
    return "pay_to_win" if profile.spend_inclined else "grinder"


__all__ = [
    "RandomPolicy", "RuleBasedPolicy", "ScriptedPolicy", "ScriptStep", "random_decide",
    "rule_based_decide", "rule_based_negotiate", "rule_based_strategy", "grinder_script",
    "pay_to_win_script", "PERSONA_SCRIPTS", "default_persona",
]
