"""Applying one structured action to the live state."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..actions import ActionKind, MoveKind, StructuredAction
from ..comms import ChatMessage, IllegalMove, SessionState, canonical_body, negotiate_step, settle_p2p
from ..economy import ExecutionFeedback, recharge, shop_buy, shop_choice, upgrade
from ..market import Side, Trade, place_order
from ..world import execute_task, plan_task
from .state import SimState


@dataclass
class ApplyResult:
    feedback: ExecutionFeedback
    trades: list[Trade] = field(default_factory=list)
    messages: list[ChatMessage] = field(default_factory=list)


def apply_action(state: SimState, agent: int, action: StructuredAction) -> ApplyResult:
    """Execute ``action`` for ``agent``. Rule violations come back as failure
    feedback and leave the state untouched (except the walk of a failed Task)."""
    ledger = state.ledgers[agent]
    kind = action.kind
    if kind is ActionKind.UPGRADE:
        fb = upgrade(ledger)
        if fb.success:
            state.upgrades[agent] = state.upgrades.get(agent, 0) + 1
        return ApplyResult(fb)
    if kind is ActionKind.RECHARGE:
        fb = recharge(ledger)
        if fb.success:
            state.ccy_spent[agent] = state.ccy_spent.get(agent, 0) + 1
        return ApplyResult(fb)
    if kind is ActionKind.SHOP:
        item = shop_choice(ledger)
        fb = shop_buy(ledger, state.shop_price)
        if fb.success:
            state.shop_purchases[item] += 1
        return ApplyResult(fb)
    if kind is ActionKind.TASK:
        plan = plan_task(state.grid, agent, state.visibility_radius, state.explore_cap)
        return ApplyResult(execute_task(state.grid, agent, plan, ledger))
    if kind in (ActionKind.AUCTION_BUY, ActionKind.AUCTION_SELL):
        side = Side.BID if kind is ActionKind.AUCTION_BUY else Side.ASK
        order = state.book.new_order(agent, side, action.price, state.step)
        trades, fb = place_order(state.book, order, state.ledgers, state.step)
        state.trades.extend(trades)
        return ApplyResult(fb, trades)
    if kind is ActionKind.P2P:
        return _apply_p2p(state, agent, action)
    raise ValueError(f"unknown action kind {kind}")


def _fail(action: StructuredAction, reason: str) -> ApplyResult:
    return ApplyResult(ExecutionFeedback.fail(action, reason))


def _post(state: SimState, sender: int, body: str, recipient: int | None) -> ChatMessage:
    state.comms.post_message(state.step, sender, body, recipient)
    return state.comms.log[-1]


def _apply_p2p(state: SimState, agent: int, action: StructuredAction) -> ApplyResult:
    comms, move, target = state.comms, action.move, action.target
    if move is None:
        return _fail(action, "no negotiation move given")
    if target is not None and target == agent:
        return _fail(action, "cannot negotiate with yourself")
    if target is not None and target not in state.ledgers:
        return _fail(action, f"unknown agent {target}")

    if move.kind is MoveKind.PUBLIC:
        if state.ledgers[agent].mat < 1:
            return _fail(action, "insufficient MAT to offer")
        msg = _post(state, agent, canonical_body(move), None)
        comms.public_offers.append((state.step, agent, move.price))
        return ApplyResult(ExecutionFeedback.ok(action), messages=[msg])

    session = comms.oldest_awaiting(agent) if target is None else comms.active_between(agent, target)
    if session is not None:
        if session.next_mover != agent:
            return _fail(action, "not your turn in the negotiation")
        try:
            updated = negotiate_step(session, move, mover=agent, step=state.step)
        except IllegalMove as exc:
            return _fail(action, str(exc))
        comms.update(updated)
        msg = _post(state, agent, canonical_body(move), updated.counterparty(agent))
        if updated.state is SessionState.EXPIRED:
            return ApplyResult(ExecutionFeedback.fail(action, "negotiation expired after max rounds"), messages=[msg])
        if updated.state is SessionState.ACCEPTED:
            trade, fb = settle_p2p(updated, state.ledgers, state.step)
            trades = []
            if trade is not None:
                state.trades.append(trade)
                trades.append(trade)
            return ApplyResult(ExecutionFeedback(action, fb.success, fb.reason), trades, [msg])
        return ApplyResult(ExecutionFeedback.ok(action), messages=[msg])

    if move.kind is not MoveKind.OFFER:
        return _fail(action, "no negotiation awaiting your reply")
    if target is None:
        target = comms.latest_public_seller(exclude=agent)
        if target is None:
            return _fail(action, "no public offer to reply to")
    if comms.outbound_active(agent) is not None:
        return _fail(action, "already negotiating")
    if any(sender == target for _, sender, _ in comms.public_offers):
        seller, buyer = target, agent
    elif state.ledgers[agent].mat >= 1:
        seller, buyer = agent, target
    else:
        seller, buyer = target, agent
    comms.open(seller, buyer, agent, move.price, state.step)
    msg = _post(state, agent, canonical_body(move), target)
    return ApplyResult(ExecutionFeedback.ok(action), messages=[msg])
