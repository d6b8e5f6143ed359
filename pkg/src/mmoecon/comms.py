"""Public/private chat and the P2P bargaining protocol.

A negotiation is a short alternating-offers exchange over one unit of MAT.
The proposer's opening offer is round 1; each counter-offer adds a round.
A counter-offer that would exceed ``max_rounds`` expires the session.
Accepted sessions settle by an atomic swap without any escrow.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

from .actions import ACCEPT, REJECT, Move, MoveKind, Offer, P2P
from .actions import round_price, ActionParseError
from .economy import ExecutionFeedback, ResourceLedger
from .market import Trade, Venue

DEFAULT_MAX_ROUNDS = 4


class UnknownRecipient(KeyError):
    pass


class IllegalMove(ValueError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    step: int
    sender: int
    body: str
    recipient: int | None = None  # None = public channel
    seq: int = 0

    @property
    def channel(self) -> str:
        return "public" if self.recipient is None else "private"

    def to_dict(self) -> dict:
        return {"step": self.step, "channel": self.channel, "sender": self.sender,
                "recipient": self.recipient, "body": self.body}

    def render(self) -> str:
        where = "[public]" if self.recipient is None else "[private]"
        return f"{where} agent {self.sender}: {self.body}"


class SessionState(str, Enum):
    PROPOSED = "proposed"
    COUNTERED = "countered"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    EXPIRED = "expired"


TERMINAL = frozenset({SessionState.ACCEPTED, SessionState.REJECTED, SessionState.EXPIRED})


@dataclass(frozen=True)
class NegotiationSession:
    session_id: int
    seller: int
    buyer: int
    proposer: int
    current_offer: int
    state: SessionState = SessionState.PROPOSED
    round: int = 1
    max_rounds: int = DEFAULT_MAX_ROUNDS
    last_mover: int | None = None
    last_step: int = 0
    history: tuple[tuple[int, str], ...] = ()

    def __post_init__(self) -> None:
        if self.proposer not in (self.seller, self.buyer):
            raise ValueError("proposer must be a party to the session")
        if self.seller == self.buyer:
            raise ValueError("seller and buyer must differ")

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL

    @property
    def next_mover(self) -> int | None:
        if self.terminal:
            return None
        last = self.proposer if self.last_mover is None else self.last_mover
        return self.buyer if last == self.seller else self.seller

    def counterparty(self, agent: int) -> int:
        return self.buyer if agent == self.seller else self.seller

    def involves(self, agent: int) -> bool:
        return agent in (self.seller, self.buyer)

    def render(self, viewer: int) -> str:
        role = "selling to" if viewer == self.seller else "buying from"
        return (f"negotiation #{self.session_id}: you are {role} agent {self.counterparty(viewer)}, "
                f"current offer {self.current_offer} TOK for 1 MAT, round {self.round}/{self.max_rounds}, "
                f"state {self.state.value}")

    def to_dict(self) -> dict:
        return {"session_id": self.session_id, "seller": self.seller, "buyer": self.buyer,
                "proposer": self.proposer, "state": self.state.value, "offer": self.current_offer,
                "round": self.round, "max_rounds": self.max_rounds}


def open_session(session_id: int, seller: int, buyer: int, proposer: int, price: int,
                 max_rounds: int = DEFAULT_MAX_ROUNDS, step: int = 0) -> NegotiationSession:
    if price < 1:
        raise IllegalMove("offer price must be >= 1")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    return NegotiationSession(session_id, seller, buyer, proposer, price, max_rounds=max_rounds,
                              last_step=step, history=((proposer, f"OFFER {price}"),))


def negotiate_step(session: NegotiationSession, move: Move, mover: int | None = None,
                   step: int | None = None) -> NegotiationSession:
    """Apply one move. Raises :class:`IllegalMove` on terminal sessions,
    out-of-turn movers, or non-negotiation moves."""
    if session.terminal:
        raise IllegalMove(f"session {session.session_id} is already {session.state.value}")
    expected = session.next_mover
    if mover is not None and mover != expected:
        raise IllegalMove(f"agent {mover} moved out of turn (expected {expected})")
    step = session.last_step if step is None else step
    entry = (expected, canonical_body(move))
    common = dict(last_mover=expected, last_step=step, history=session.history + (entry,))
    if move.kind is MoveKind.OFFER:
        if session.round + 1 > session.max_rounds:
            return replace(session, state=SessionState.EXPIRED, **common)
        return replace(session, state=SessionState.COUNTERED, current_offer=move.price,
                       round=session.round + 1, **common)
    if move.kind is MoveKind.ACCEPT:
        return replace(session, state=SessionState.ACCEPTED, **common)
    if move.kind is MoveKind.REJECT:
        return replace(session, state=SessionState.REJECTED, **common)
    raise IllegalMove(f"{move.kind.value} is not a negotiation move")


def expire(session: NegotiationSession, step: int | None = None) -> NegotiationSession:
    if session.terminal:
        raise IllegalMove(f"session {session.session_id} is already {session.state.value}")
    return replace(session, state=SessionState.EXPIRED,
                   last_step=session.last_step if step is None else step)


def settle_p2p(session: NegotiationSession, ledgers: Mapping[int, ResourceLedger],
               step: int = 0) -> tuple[Trade | None, ExecutionFeedback]:
    """Atomic check-and-swap of 1 MAT against the agreed TOK price."""
    if session.state is not SessionState.ACCEPTED:
        raise IllegalMove("only accepted sessions settle")
    accepter = session.last_mover if session.last_mover is not None else session.buyer
    action = P2P(session.counterparty(accepter), ACCEPT)
    seller, buyer, price = ledgers[session.seller], ledgers[session.buyer], session.current_offer
    if seller.mat < 1:
        return None, ExecutionFeedback.fail(action, f"settlement failed: seller {session.seller} lacks MAT")
    if buyer.tok < price:
        return None, ExecutionFeedback.fail(action, f"settlement failed: buyer {session.buyer} lacks TOK")
    seller.mat -= 1
    buyer.mat += 1
    buyer.tok -= price
    seller.tok += price
    return Trade(step, session.buyer, session.seller, price, Venue.P2P), ExecutionFeedback.ok(action)


def canonical_body(move: Move) -> str:
    if move.kind is MoveKind.OFFER:
        return f"OFFER {move.price}"
    if move.kind is MoveKind.PUBLIC:
        return f"SELLING MAT OFFER {move.price}"
    return move.kind.value.upper()


_MOVE_RE = re.compile(r"\b(offer)\s*:?\s*(\d+(?:\.\d+)?)|\b(accept)\b|\b(reject)\b", re.IGNORECASE)


def parse_move(text: str) -> tuple[Move | None, list[str]]:
    """Read ``OFFER p`` / ``ACCEPT`` / ``REJECT`` out of a reply. The last match wins."""
    matches = list(_MOVE_RE.finditer(text or ""))
    if not matches:
        return None, []
    m = matches[-1]
    if m.group(3):
        return ACCEPT, []
    if m.group(4):
        return REJECT, []
    try:
        price, rounded = round_price(m.group(2))
    except ActionParseError:
        return None, []
    return Offer(price), ([f"non-integer offer rounded half-up to {price}"] if rounded else [])


@dataclass
class ChatHub:
    """Channels plus the registry of negotiation sessions for one run."""

    agents: tuple[int, ...]
    max_rounds: int = DEFAULT_MAX_ROUNDS
    inboxes: dict[int, list[ChatMessage]] = field(default_factory=dict)
    sessions: dict[int, NegotiationSession] = field(default_factory=dict)
    public_offers: list[tuple[int, int, int]] = field(default_factory=list)  # (step, sender, price)
    log: list[ChatMessage] = field(default_factory=list)
    _seq: int = 0
    _next_session: int = 0

    def __post_init__(self) -> None:
        for a in self.agents:
            self.inboxes.setdefault(a, [])

    def post_message(self, step: int, sender: int, body: str, recipient: int | None = None) -> list[int]:
        if sender not in self.inboxes:
            raise UnknownRecipient(f"unknown sender {sender}")
        if recipient is not None and recipient not in self.inboxes:
            raise UnknownRecipient(f"unknown recipient {recipient}")
        msg = ChatMessage(step, sender, body, recipient, self._seq)
        self._seq += 1
        self.log.append(msg)
        targets = [a for a in self.agents if a != sender] if recipient is None else [recipient]
        for a in targets:
            self.inboxes[a].append(msg)
        return targets

    def drain(self, agent: int) -> tuple[ChatMessage, ...]:
        """Hand over and clear everything queued for ``agent`` (exactly-once delivery)."""
        msgs = tuple(self.inboxes[agent])
        self.inboxes[agent] = []
        return msgs

    def peek(self, agent: int) -> tuple[ChatMessage, ...]:
        return tuple(self.inboxes[agent])

    # --- sessions -----------------------------------------------------------

    def active(self) -> Iterable[NegotiationSession]:
        return (s for s in self.sessions.values() if not s.terminal)

    def active_between(self, a: int, b: int) -> NegotiationSession | None:
        for s in self.active():
            if s.involves(a) and s.involves(b):
                return s
        return None

    def oldest_awaiting(self, agent: int) -> NegotiationSession | None:
        for s in self.active():
            if s.next_mover == agent:
                return s
        return None

    def awaiting(self, agent: int) -> list[NegotiationSession]:
        return [s for s in self.active() if s.next_mover == agent]

    def outbound_active(self, agent: int) -> NegotiationSession | None:
        for s in self.active():
            if s.proposer == agent:
                return s
        return None

    def latest_public_seller(self, exclude: int) -> int | None:
        for _, sender, _ in reversed(self.public_offers):
            if sender != exclude:
                return sender
        return None

    def open(self, seller: int, buyer: int, proposer: int, price: int, step: int) -> NegotiationSession:
        session = open_session(self._next_session, seller, buyer, proposer, price, self.max_rounds, step)
        self._next_session += 1
        self.sessions[session.session_id] = session
        return session

    def update(self, session: NegotiationSession) -> None:
        old = self.sessions[session.session_id]
        if old.terminal:
            raise IllegalMove(f"session {old.session_id} is terminal")
        self.sessions[session.session_id] = session

    def expire_stale(self, step: int, timeout: int) -> list[NegotiationSession]:
        expired = []
        for s in list(self.active()):
            if step - s.last_step >= timeout:
                done = expire(s, step)
                self.sessions[s.session_id] = done
                expired.append(done)
        return expired
