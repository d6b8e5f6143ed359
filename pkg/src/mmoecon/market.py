"""Continuous double auction for MAT priced in TOK.

Orders are for a single unit. Resting orders hold escrow (1 MAT per ask,
``price`` TOK per bid). An incoming order trades against the best crossing
order of another owner at the *resting* order's price; whatever does not
trade rests in the book.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .actions import AuctionBuy, AuctionSell
from .economy import ExecutionFeedback, ResourceLedger


class Side(str, Enum):
    BID = "bid"
    ASK = "ask"


class Venue(str, Enum):
    AUCTION = "auction"
    P2P = "p2p"


class UnknownOrder(KeyError):
    pass


class NotOwner(PermissionError):
    pass


@dataclass(frozen=True)
class Order:
    order_id: int
    owner: int
    side: Side
    price: int
    placed_at: tuple[int, int]
    qty: int = 1

    def __post_init__(self) -> None:
        if self.price < 1:
            raise ValueError("order price must be >= 1")
        if self.qty != 1:
            raise ValueError("orders are for exactly one unit")

    @property
    def priority(self) -> tuple:
        sign = -1 if self.side is Side.BID else 1
        return (sign * self.price, self.placed_at)

    def as_action(self):
        return AuctionBuy(self.price) if self.side is Side.BID else AuctionSell(self.price)


@dataclass(frozen=True)
class Trade:
    step: int
    buyer: int
    seller: int
    price: int
    venue: Venue

    def __post_init__(self) -> None:
        if self.price < 1:
            raise ValueError("trade price must be >= 1")

    def to_dict(self) -> dict:
        return {"step": self.step, "venue": self.venue.value, "price": self.price,
                "buyer": self.buyer, "seller": self.seller}


@dataclass
class OrderBook:
    bids: list[Order] = field(default_factory=list)
    asks: list[Order] = field(default_factory=list)
    escrow: dict[int, dict[str, int]] = field(default_factory=dict)
    _next_id: int = 0
    _seq: int = 0

    def new_order(self, owner: int, side: Side, price: int, step: int) -> Order:
        order = Order(self._next_id, owner, Side(side), price, (step, self._seq))
        self._next_id += 1
        self._seq += 1
        return order

    def side_list(self, side: Side) -> list[Order]:
        return self.bids if side is Side.BID else self.asks

    def escrow_of(self, agent: int) -> dict[str, int]:
        return dict(self.escrow.get(agent, {"mat": 0, "tok": 0}))

    def orders_of(self, agent: int) -> list[Order]:
        return [o for o in self.bids + self.asks if o.owner == agent]

    def find(self, order_id: int) -> Order | None:
        for o in self.bids + self.asks:
            if o.order_id == order_id:
                return o
        return None

    @property
    def best_bid(self) -> int | None:
        return self.bids[0].price if self.bids else None

    @property
    def best_ask(self) -> int | None:
        return self.asks[0].price if self.asks else None

    def _escrow_add(self, agent: int, mat: int = 0, tok: int = 0) -> None:
        slot = self.escrow.setdefault(agent, {"mat": 0, "tok": 0})
        slot["mat"] += mat
        slot["tok"] += tok
        if slot["mat"] < 0 or slot["tok"] < 0:
            raise AssertionError(f"negative escrow for agent {agent}")
        if slot["mat"] == 0 and slot["tok"] == 0:
            del self.escrow[agent]

    def _rest(self, order: Order) -> None:
        bisect.insort(self.side_list(order.side), order, key=lambda o: o.priority)

    def _remove(self, order: Order) -> None:
        self.side_list(order.side).remove(order)

    def escrow_totals(self) -> dict[str, int]:
        return {
            "mat": sum(e["mat"] for e in self.escrow.values()),
            "tok": sum(e["tok"] for e in self.escrow.values()),
        }

    def check(self) -> None:
        """Escrow equals resting orders; no cross between different owners."""
        want: dict[int, dict[str, int]] = {}
        for o in self.asks:
            want.setdefault(o.owner, {"mat": 0, "tok": 0})["mat"] += 1
        for o in self.bids:
            want.setdefault(o.owner, {"mat": 0, "tok": 0})["tok"] += o.price
        if want != self.escrow:
            raise AssertionError(f"escrow {self.escrow} != resting orders {want}")
        for b in self.bids:
            for a in self.asks:
                if b.owner != a.owner and b.price >= a.price:
                    raise AssertionError(f"crossed book at rest: {b} vs {a}")


def _settle(book: OrderBook, bid: Order, ask: Order, price: int,
            ledgers: Mapping[int, ResourceLedger], step: int) -> Trade:
    buyer, seller = ledgers[bid.owner], ledgers[ask.owner]
    book._escrow_add(ask.owner, mat=-1)
    book._escrow_add(bid.owner, tok=-bid.price)
    buyer.mat += 1
    buyer.tok += bid.price - price  # refund any overpayment
    seller.tok += price
    return Trade(step, bid.owner, ask.owner, price, Venue.AUCTION)


def place_order(book: OrderBook, order: Order, ledgers: Mapping[int, ResourceLedger],
                step: int | None = None) -> tuple[list[Trade], ExecutionFeedback]:
    step = order.placed_at[0] if step is None else step
    action = order.as_action()
    ledger = ledgers[order.owner]
    if order.side is Side.BID:
        if ledger.tok < order.price:
            return [], ExecutionFeedback.fail(action, "insufficient TOK to escrow bid")
        ledger.tok -= order.price
        book._escrow_add(order.owner, tok=order.price)
        opposite, crosses = book.asks, (lambda resting: resting.price <= order.price)
    else:
        if ledger.mat < 1:
            return [], ExecutionFeedback.fail(action, "insufficient MAT to escrow ask")
        ledger.mat -= 1
        book._escrow_add(order.owner, mat=1)
        opposite, crosses = book.bids, (lambda resting: resting.price >= order.price)

    trades: list[Trade] = []
    for resting in opposite:
        if not crosses(resting):
            break
        if resting.owner == order.owner:
            continue  # self-trade ban
        book._remove(resting)
        if order.side is Side.BID:
            trades.append(_settle(book, order, resting, resting.price, ledgers, step))
        else:
            trades.append(_settle(book, resting, order, resting.price, ledgers, step))
        break  # unit quantity: one match fills the incoming order
    if not trades:
        book._rest(order)
    return trades, ExecutionFeedback.ok(action)


def cancel_order(book: OrderBook, order_id: int, owner: int,
                 ledgers: Mapping[int, ResourceLedger]) -> ExecutionFeedback:
    order = book.find(order_id)
    if order is None:
        raise UnknownOrder(order_id)
    if order.owner != owner:
        raise NotOwner(f"order {order_id} belongs to agent {order.owner}")
    book._remove(order)
    if order.side is Side.BID:
        book._escrow_add(owner, tok=-order.price)
        ledgers[owner].tok += order.price
    else:
        book._escrow_add(owner, mat=-1)
        ledgers[owner].mat += 1
    return ExecutionFeedback.ok(order.as_action())


def expire_orders(book: OrderBook, step: int, ttl: int | None,
                  ledgers: Mapping[int, ResourceLedger]) -> list[Order]:
    """Cancel orders resting for ``ttl`` steps or more. ``ttl=None`` never expires."""
    if ttl is None:
        return []
    stale = [o for o in book.bids + book.asks if step - o.placed_at[0] >= ttl]
    for o in stale:
        cancel_order(book, o.order_id, o.owner, ledgers)
    return stale


@dataclass(frozen=True)
class BookSummary:
    best_bid: int | None
    best_ask: int | None
    top_bids: tuple[int, ...]
    top_asks: tuple[int, ...]
    bid_count: int
    ask_count: int

    @property
    def text(self) -> str:
        def fmt(prices):
            return ", ".join(str(p) for p in prices) if prices else "none"

        return (
            f"Auction MAT: {self.ask_count} selling orders (lowest asks: {fmt(self.top_asks)}), "
            f"{self.bid_count} bidding orders (highest bids: {fmt(self.top_bids)})."
        )

    def to_dict(self) -> dict:
        return {"best_bid": self.best_bid, "best_ask": self.best_ask, "top_bids": list(self.top_bids),
                "top_asks": list(self.top_asks), "bid_count": self.bid_count, "ask_count": self.ask_count}


def book_summary(book: OrderBook, k: int = 5) -> BookSummary:
    return BookSummary(
        best_bid=book.best_bid,
        best_ask=book.best_ask,
        top_bids=tuple(o.price for o in book.bids[:k]),
        top_asks=tuple(o.price for o in book.asks[:k]),
        bid_count=len(book.bids),
        ask_count=len(book.asks),
    )
