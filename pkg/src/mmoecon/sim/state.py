"""Mutable world state owned by the step resolver."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..comms import ChatHub
from ..economy import DEFAULT_SHOP_PRICE, ResourceLedger
from ..market import OrderBook, Trade
from ..world import Grid


@dataclass
class SimState:
    grid: Grid
    ledgers: dict[int, ResourceLedger]
    book: OrderBook
    comms: ChatHub
    step: int = 0
    shop_price: int = DEFAULT_SHOP_PRICE
    visibility_radius: int = 5
    explore_cap: int = 10
    book_depth: int = 5
    trades: list[Trade] = field(default_factory=list)
    ccy_spent: dict[int, int] = field(default_factory=dict)
    upgrades: dict[int, int] = field(default_factory=dict)
    shop_purchases: dict[str, int] = field(default_factory=lambda: {"mat": 0, "exp": 0})

    def totals(self) -> dict[str, int]:
        """Economy-wide holdings, counting escrowed MAT/TOK with their owners."""
        out = {k: 0 for k in ("exp", "mat", "tok", "ccy", "cap", "lab")}
        for ledger in self.ledgers.values():
            for k in out:
                out[k] += getattr(ledger, k)
        esc = self.book.escrow_totals()
        out["mat"] += esc["mat"]
        out["tok"] += esc["tok"]
        return out
