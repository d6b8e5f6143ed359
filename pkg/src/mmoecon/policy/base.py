"""Decision-backend contract and the context handed to every backend."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any, Sequence

from ..actions import REJECT, Move, StructuredAction
from ..agent.memory import MemoryRecord, render_stm

if TYPE_CHECKING:
    from ..agent.observation import Observation
    from ..agent.profiles import AgentProfile
    from ..comms import NegotiationSession
    from ..economy import ExecutionFeedback


class BackendFailure(RuntimeError):
    """The backend could not produce a decision (network down, timeouts, ...)."""


ACTION_CATALOG = (
    "Task: walk to the nearest visible EXP/MAT tile and collect it, or explore if none is visible.\n"
    "Recharge: spend 1 CCY to get 10 TOK.\n"
    "Shop: pay {shop_price} TOK for 1 unit of whichever of MAT/EXP you hold fewer of.\n"
    "AuctionBuy price=p: bid p TOK for 1 MAT in the auction (p TOK held in escrow).\n"
    "AuctionSell price=p: offer 1 MAT in the auction for p TOK (the MAT is held in escrow).\n"
    "Upgrade: spend 1 MAT, 1 EXP and 1 TOK for +10 CAP.\n"
    "P2P target=id move=offer|accept|reject price=p: bargain privately over 1 MAT; "
    "P2P move=public price=p broadcasts a sell offer."
)


@dataclass(frozen=True)
class PromptContext:
    """Everything a backend may look at for one decision.

    Numeric backends read ``observation``; text backends use the rendered
    ``*_text`` properties, which are deterministic in the inputs.
    """

    agent: int
    profile: AgentProfile
    observation: Observation
    stm: tuple[tuple[Any, StructuredAction], ...] = ()
    ltm_reference: MemoryRecord | None = None
    reflection: str = ""
    feedback: ExecutionFeedback | None = None
    is_retry: bool = False
    shop_price: int = 8
    agents: tuple[int, ...] = ()

    @property
    def profile_text(self) -> str:
        return self.profile.profile_text

    @property
    def observation_text(self) -> str:
        return self.observation.text

    @cached_property
    def stm_text(self) -> str:
        return render_stm(self.stm)

    @property
    def ltm_reference_text(self) -> str:
        ref = self.ltm_reference
        if ref is None:
            return "none"
        inv = getattr(ref.observation, "inventory", None)
        where = (f" when holding EXP {inv.exp}, MAT {inv.mat}, TOK {inv.tok}, CCY {inv.ccy}"
                 if inv is not None else "")
        return f"{ref.action} paid off before{where} (importance {ref.score:.2f})"

    @property
    def reflection_text(self) -> str:
        return self.reflection or "none yet"

    @property
    def feedback_text(self) -> str:
        if self.feedback is None:
            return "none"
        prefix = "This step's first choice " if self.is_retry else "Last action "
        return prefix + str(self.feedback)

    @property
    def action_catalog_text(self) -> str:
        return ACTION_CATALOG.format(shop_price=self.shop_price)


class Policy:
    """Base class for decision backends.

    Subclasses override :meth:`decide`; :meth:`reflect` and :meth:`negotiate`
    have conservative defaults. Non-fatal problems go to :meth:`warn` and are
    collected by the simulation loop into the trace.
    """

    name = "policy"

    def __init__(self) -> None:
        self.warnings: list[str] = []

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    def drain_warnings(self) -> list[str]:
        out, self.warnings = self.warnings, []
        return out

    def decide(self, ctx: PromptContext) -> StructuredAction:
        raise NotImplementedError

    def reflect(self, window: Sequence[tuple[StructuredAction, Any]], sr_prev: str) -> str:
        return sr_prev

    def negotiate(self, session: NegotiationSession | None, ctx: PromptContext) -> Move:
        return REJECT

