"""Perception: turn the raw simulation state into a per-agent observation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from ..comms import ChatMessage, NegotiationSession
from ..economy import ResourceLedger
from ..market import BookSummary, book_summary
from ..world import Coord, visible_resources

if TYPE_CHECKING:
    from ..sim.state import SimState

EMBEDDING_FIELDS = (
    "exp", "mat", "tok", "ccy", "cap", "escrow_mat", "escrow_tok",
    "best_bid", "best_ask", "bid_count", "ask_count", "nearby_exp", "nearby_mat",
)
EMBEDDING_SIZE = len(EMBEDDING_FIELDS)


@dataclass(frozen=True)
class Observation:
    step: int
    agent: int
    inventory: ResourceLedger
    escrow: dict[str, int]
    auction: BookSummary
    nearby: tuple[tuple[str, Coord, int], ...]
    messages: tuple[ChatMessage, ...] = ()
    negotiations: tuple[NegotiationSession, ...] = ()
    position: Coord = (0, 0)

    @property
    def nearby_counts(self) -> dict[str, int]:
        counts = {"EXP": 0, "MAT": 0}
        for kind, _, _ in self.nearby:
            counts[kind] += 1
        return counts

    @cached_property
    def embedding(self) -> np.ndarray:
        inv, a, near = self.inventory, self.auction, self.nearby_counts
        return np.array(
            [inv.exp, inv.mat, inv.tok, inv.ccy, inv.cap, self.escrow["mat"], self.escrow["tok"],
             a.best_bid or 0, a.best_ask or 0, a.bid_count, a.ask_count, near["EXP"], near["MAT"]],
            dtype=float,
        )

    @cached_property
    def text(self) -> str:
        inv = self.inventory
        lines = [
            f"Step {self.step}.",
            f"Inventory: EXP {inv.exp}, MAT {inv.mat}, TOK {inv.tok}, CCY {inv.ccy}, CAP {inv.cap}, LAB {inv.lab}.",
            f"Escrowment in auction: MAT {self.escrow['mat']}, TOK {self.escrow['tok']}.",
            self.auction.text,
        ]
        if self.nearby:
            spots = "; ".join(f"{k} at {c} ({d} tiles away)" for k, c, d in self.nearby[:8])
            lines.append(f"Nearby resources ({len(self.nearby)}): {spots}.")
        else:
            lines.append("Nearby resources: none in sight.")
        if self.messages:
            lines.append("Messages:")
            lines.extend(f"  {m.render()}" for m in self.messages)
        else:
            lines.append("Messages: none.")
        for s in self.negotiations:
            lines.append(f"Awaiting your reply in {s.render(self.agent)}.")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"step": self.step, "agent": self.agent, "inventory": self.inventory.as_dict(),
                "escrow": dict(self.escrow), "auction": self.auction.to_dict(),
                "nearby": [[k, list(c), d] for k, c, d in self.nearby],
                "messages": [m.to_dict() for m in self.messages]}


def parse_observation(state: SimState, agent: int,
                      messages: tuple[ChatMessage, ...] | None = None) -> Observation:
    """Snapshot ``agent``'s view. ``messages`` defaults to a non-consuming peek at the inbox."""
    if agent not in state.ledgers:
        raise KeyError(f"unknown agent {agent}")
    pos = state.grid.agent_positions[agent]
    if messages is None:
        messages = state.comms.peek(agent)
    return Observation(
        step=state.step,
        agent=agent,
        inventory=state.ledgers[agent].copy(),
        escrow=state.book.escrow_of(agent),
        auction=book_summary(state.book, state.book_depth),
        nearby=tuple(visible_resources(state.grid, pos, state.visibility_radius)),
        messages=tuple(messages),
        negotiations=tuple(state.comms.awaiting(agent)),
        position=pos,
    )
