"""The structured action alphabet and its one-line text grammar.

Every decision an agent makes is one of seven structured actions. Policy
backends that speak text (the remote LLM) end their reply with a directive
line such as::

    ACTION: AuctionBuy price=6
    ACTION: P2P target=3 move=offer price=5

:func:`parse_action_line` turns such a line back into a
:class:`StructuredAction`; :func:`render_action` is its inverse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from enum import Enum
from typing import Any


class ActionKind(str, Enum):
    TASK = "Task"
    RECHARGE = "Recharge"
    SHOP = "Shop"
    AUCTION_BUY = "AuctionBuy"
    AUCTION_SELL = "AuctionSell"
    UPGRADE = "Upgrade"
    P2P = "P2P"


ACTION_KINDS: tuple[ActionKind, ...] = tuple(ActionKind)


class MoveKind(str, Enum):
    OFFER = "offer"
    ACCEPT = "accept"
    REJECT = "reject"
    PUBLIC = "public"  # open a public sell offer


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    price: int | None = None

    def __post_init__(self) -> None:
        if self.kind in (MoveKind.OFFER, MoveKind.PUBLIC):
            if self.price is None or self.price < 1:
                raise ValueError(f"{self.kind.value} move needs a price >= 1")
        elif self.price is not None:
            raise ValueError(f"{self.kind.value} move takes no price")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "price": self.price}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Move:
        return cls(MoveKind(d["kind"]), d.get("price"))


def Offer(price: int) -> Move:
    return Move(MoveKind.OFFER, price)


def OpenPublicOffer(price: int) -> Move:
    return Move(MoveKind.PUBLIC, price)


ACCEPT = Move(MoveKind.ACCEPT)
REJECT = Move(MoveKind.REJECT)


@dataclass(frozen=True)
class StructuredAction:
    """One decision. ``price`` is used by the auction actions, ``target`` and
    ``move`` by P2P. A P2P action with ``move=None`` asks the backend's
    negotiation routine to pick the move."""

    kind: ActionKind
    price: int | None = None
    target: int | None = None
    move: Move | None = None

    def __post_init__(self) -> None:
        if self.kind in (ActionKind.AUCTION_BUY, ActionKind.AUCTION_SELL):
            if self.price is None or self.price < 1:
                raise ValueError(f"{self.kind.value} needs a price >= 1")
        elif self.price is not None:
            raise ValueError(f"{self.kind.value} takes no price")
        if self.kind is not ActionKind.P2P and (self.target is not None or self.move is not None):
            raise ValueError(f"{self.kind.value} takes no target/move")

    def __str__(self) -> str:
        return render_action(self)[len("ACTION: "):]

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.price is not None:
            d["price"] = self.price
        if self.target is not None:
            d["target"] = self.target
        if self.move is not None:
            d["move"] = self.move.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> StructuredAction:
        move = d.get("move")
        return cls(
            ActionKind(d["kind"]),
            price=d.get("price"),
            target=d.get("target"),
            move=Move.from_dict(move) if move else None,
        )


TASK = StructuredAction(ActionKind.TASK)
RECHARGE = StructuredAction(ActionKind.RECHARGE)
SHOP = StructuredAction(ActionKind.SHOP)
UPGRADE = StructuredAction(ActionKind.UPGRADE)


def Task() -> StructuredAction:
    return TASK


def Recharge() -> StructuredAction:
    return RECHARGE


def Shop() -> StructuredAction:
    return SHOP


def Upgrade() -> StructuredAction:
    return UPGRADE


def AuctionBuy(price: int) -> StructuredAction:
    return StructuredAction(ActionKind.AUCTION_BUY, price=price)


def AuctionSell(price: int) -> StructuredAction:
    return StructuredAction(ActionKind.AUCTION_SELL, price=price)


def P2P(target: int | None = None, move: Move | None = None) -> StructuredAction:
    return StructuredAction(ActionKind.P2P, target=target, move=move)


# --- text grammar -----------------------------------------------------------

_NAME_ALIASES = {k.value.lower(): k for k in ActionKind}
_NAME_ALIASES.update({"auction_buy": ActionKind.AUCTION_BUY, "auction_sell": ActionKind.AUCTION_SELL})
_ACTION_LINE = re.compile(r"^\s*\**\s*ACTION\s*\**\s*:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


class ActionParseError(ValueError):
    pass


def round_price(raw: str) -> tuple[int, bool]:
    """Round a decimal price string half-up; return (price, was_rounded)."""
    try:
        value = Decimal(raw)
    except InvalidOperation as exc:
        raise ActionParseError(f"bad price {raw!r}") from exc
    if not value.is_finite():
        raise ActionParseError(f"bad price {raw!r}")
    rounded = int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))
    if rounded < 1:
        raise ActionParseError(f"price {raw!r} rounds below 1")
    return rounded, Decimal(rounded) != value


def render_action(action: StructuredAction) -> str:
    parts = [f"ACTION: {action.kind.value}"]
    if action.target is not None:
        parts.append(f"target={action.target}")
    if action.move is not None:
        parts.append(f"move={action.move.kind.value}")
        if action.move.price is not None:
            parts.append(f"price={action.move.price}")
    if action.price is not None:
        parts.append(f"price={action.price}")
    return " ".join(parts)


def parse_action_body(body: str) -> tuple[StructuredAction, list[str]]:
    """Parse the text after ``ACTION:``. Raises :class:`ActionParseError`."""
    tokens = body.replace(",", " ").split()
    if not tokens:
        raise ActionParseError("empty action")
    kind = _NAME_ALIASES.get(tokens[0].strip("*`'\".").lower())
    if kind is None:
        raise ActionParseError(f"unknown action {tokens[0]!r}")
    args: dict[str, str] = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ActionParseError(f"malformed argument {tok!r}")
        key, value = tok.split("=", 1)
        args[key.strip().lower()] = value.strip().strip("*`'\".")

    warnings: list[str] = []
    price = None
    if "price" in args:
        price, rounded = round_price(args.pop("price"))
        if rounded:
            warnings.append(f"non-integer price rounded half-up to {price}")
    try:
        if kind is ActionKind.P2P:
            target = None
            if "target" in args:
                try:
                    target = int(args.pop("target"))
                except ValueError as exc:
                    raise ActionParseError("target must be an integer agent id") from exc
            move = None
            if "move" in args:
                try:
                    move_kind = MoveKind(args.pop("move").lower())
                except ValueError as exc:
                    raise ActionParseError("move must be offer|accept|reject|public") from exc
                move = Move(move_kind, price)
            elif price is not None:
                raise ActionParseError("price given without move")
            action = StructuredAction(kind, target=target, move=move)
        else:
            action = StructuredAction(kind, price=price)
    except ValueError as exc:
        raise ActionParseError(str(exc)) from exc
    if args:
        raise ActionParseError(f"unexpected arguments {sorted(args)}")
    return action, warnings


def parse_action_line(text: str) -> tuple[StructuredAction | None, list[str]]:
    """Find the last ``ACTION:`` line in ``text`` and parse it.

    Returns ``(None, [reason])`` when there is no parseable directive.
    """
    matches = _ACTION_LINE.findall(text or "")
    if not matches:
        return None, ["no ACTION line in reply"]
    try:
        return parse_action_body(matches[-1])
    except ActionParseError as exc:
        return None, [f"unparseable ACTION line: {exc}"]


def canonical_action_line(text: str) -> str | None:
    action, _ = parse_action_line(text)
    return None if action is None else render_action(action)
