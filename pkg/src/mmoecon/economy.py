"""Resource ledgers, the fixed conversion rules, and the rule-based verifier."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Any

from .actions import ActionKind, MoveKind, StructuredAction, RECHARGE, SHOP, UPGRADE

if TYPE_CHECKING:
    from .sim.state import SimState

RESOURCES = ("exp", "mat", "tok", "ccy", "cap", "lab")

UPGRADE_CAP_GAIN = 10
RECHARGE_TOK_GAIN = 10
DEFAULT_SHOP_PRICE = 8
DEFAULT_INITIAL_CCY = 10


@dataclass
class ResourceLedger:
    exp: int = 0
    mat: int = 0
    tok: int = 0
    ccy: int = 0
    cap: int = 0
    lab: int = 0

    def copy(self) -> ResourceLedger:
        return ResourceLedger(**asdict(self))

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    def check(self) -> None:
        for name in RESOURCES:
            if getattr(self, name) < 0:
                raise AssertionError(f"negative {name.upper()} in {self}")
        if self.cap % UPGRADE_CAP_GAIN:
            raise AssertionError(f"CAP {self.cap} not a multiple of {UPGRADE_CAP_GAIN}")


@dataclass(frozen=True)
class ExecutionFeedback:
    action: StructuredAction
    success: bool
    reason: str = ""

    def __post_init__(self) -> None:
        if self.success == bool(self.reason):
            raise ValueError("reason must be non-empty exactly when success is False")

    @classmethod
    def ok(cls, action: StructuredAction) -> ExecutionFeedback:
        return cls(action, True, "")

    @classmethod
    def fail(cls, action: StructuredAction, reason: str) -> ExecutionFeedback:
        return cls(action, False, reason)

    def to_dict(self) -> dict[str, Any]:
        return {"action": self.action.to_dict(), "success": self.success, "reason": self.reason}

    def __str__(self) -> str:
        verdict = "succeeded" if self.success else f"failed: {self.reason}"
        return f"{self.action} {verdict}"


def _upgrade_missing(ledger: ResourceLedger) -> list[str]:
    return [name.upper() for name in ("mat", "exp", "tok") if getattr(ledger, name) < 1]


def upgrade(ledger: ResourceLedger) -> ExecutionFeedback:
    """Consume 1 MAT, 1 EXP and 1 TOK for +10 CAP."""
    missing = _upgrade_missing(ledger)
    if missing:
        return ExecutionFeedback.fail(UPGRADE, "insufficient " + ", ".join(missing))
    ledger.mat -= 1
    ledger.exp -= 1
    ledger.tok -= 1
    ledger.cap += UPGRADE_CAP_GAIN
    return ExecutionFeedback.ok(UPGRADE)


def recharge(ledger: ResourceLedger) -> ExecutionFeedback:
    """Convert 1 CCY into 10 TOK."""
    if ledger.ccy < 1:
        return ExecutionFeedback.fail(RECHARGE, "insufficient CCY")
    ledger.ccy -= 1
    ledger.tok += RECHARGE_TOK_GAIN
    return ExecutionFeedback.ok(RECHARGE)


def shop_choice(ledger: ResourceLedger) -> str:
    """The most lacking upgrade input; ties go to MAT."""
    return "mat" if ledger.mat <= ledger.exp else "exp"


def shop_buy(ledger: ResourceLedger, shop_price: int = DEFAULT_SHOP_PRICE) -> ExecutionFeedback:
    if shop_price <= 0:
        raise ValueError("shop_price must be positive")
    if ledger.tok < shop_price:
        return ExecutionFeedback.fail(SHOP, "insufficient TOK")
    item = shop_choice(ledger)
    ledger.tok -= shop_price
    setattr(ledger, item, getattr(ledger, item) + 1)
    return ExecutionFeedback.ok(SHOP)


def verify(action: StructuredAction, state: SimState, agent: int) -> ExecutionFeedback:
    """Check ``action`` against the live state without mutating anything.

    The verdict agrees with what applying the action would report.
    """
    ledger = state.ledgers[agent]
    kind = action.kind
    if kind is ActionKind.UPGRADE:
        missing = _upgrade_missing(ledger)
        if missing:
            return ExecutionFeedback.fail(action, "insufficient " + ", ".join(missing))
        return ExecutionFeedback.ok(action)
    if kind is ActionKind.RECHARGE:
        if ledger.ccy < 1:
            return ExecutionFeedback.fail(action, "insufficient CCY")
        return ExecutionFeedback.ok(action)
    if kind is ActionKind.SHOP:
        if ledger.tok < state.shop_price:
            return ExecutionFeedback.fail(action, "insufficient TOK")
        return ExecutionFeedback.ok(action)
    if kind is ActionKind.AUCTION_BUY:
        if ledger.tok < action.price:
            return ExecutionFeedback.fail(action, "insufficient TOK to escrow bid")
        return ExecutionFeedback.ok(action)
    if kind is ActionKind.AUCTION_SELL:
        if ledger.mat < 1:
            return ExecutionFeedback.fail(action, "insufficient MAT to escrow ask")
        return ExecutionFeedback.ok(action)
    if kind is ActionKind.TASK:
        pos = state.grid.agent_positions[agent]
        if not state.grid.any_resource_within(pos, state.visibility_radius):
            return ExecutionFeedback.fail(action, "no resource found nearby")
        return ExecutionFeedback.ok(action)
    if kind is ActionKind.P2P:
        return _verify_p2p(action, state, agent)
    raise ValueError(f"unknown action kind {kind}")


def _verify_p2p(action: StructuredAction, state: SimState, agent: int) -> ExecutionFeedback:
    comms = state.comms
    move = action.move
    if move is None:
        return ExecutionFeedback.fail(action, "no negotiation move given")
    if action.target is not None:
        if action.target == agent:
            return ExecutionFeedback.fail(action, "cannot negotiate with yourself")
        if action.target not in state.ledgers:
            return ExecutionFeedback.fail(action, f"unknown agent {action.target}")
    if move.kind is MoveKind.PUBLIC:
        if state.ledgers[agent].mat < 1:
            return ExecutionFeedback.fail(action, "insufficient MAT to offer")
        return ExecutionFeedback.ok(action)

    if action.target is None:
        session = comms.oldest_awaiting(agent)
    else:
        session = comms.active_between(agent, action.target)
    if session is not None:
        if session.next_mover != agent:
            return ExecutionFeedback.fail(action, "not your turn in the negotiation")
        if move.kind is MoveKind.OFFER and session.round >= session.max_rounds:
            return ExecutionFeedback.fail(action, "negotiation expired after max rounds")
        if move.kind is MoveKind.ACCEPT:
            seller, buyer = state.ledgers[session.seller], state.ledgers[session.buyer]
            if seller.mat < 1:
                return ExecutionFeedback.fail(action, f"settlement failed: seller {session.seller} lacks MAT")
            if buyer.tok < session.current_offer:
                return ExecutionFeedback.fail(action, f"settlement failed: buyer {session.buyer} lacks TOK")
        return ExecutionFeedback.ok(action)

    # opening a new session
    if move.kind is not MoveKind.OFFER:
        return ExecutionFeedback.fail(action, "no negotiation awaiting your reply")
    target = action.target
    if target is None:
        target = comms.latest_public_seller(exclude=agent)
        if target is None:
            return ExecutionFeedback.fail(action, "no public offer to reply to")
    if comms.outbound_active(agent) is not None:
        return ExecutionFeedback.fail(action, "already negotiating")
    return ExecutionFeedback.ok(action)
