"""The per-agent cognitive loop: memory bundle, decision, reward, reflection."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

from ..actions import StructuredAction
from ..economy import ExecutionFeedback, ResourceLedger
from ..policy.base import BackendFailure, Policy, PromptContext
from .memory import LongTermMemory, MemoryConfig, ShortTermMemory
from .observation import Observation
from .profiles import AgentProfile


def reward_of(before: ResourceLedger, after: ResourceLedger) -> int:
    """Capability gained over the step (10 per successful Upgrade)."""
    return after.cap - before.cap


@dataclass
class ReflectionState:
    period: int = 10
    sr_prev: str = ""
    window: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        self.window = deque(self.window, maxlen=self.period)

    def push(self, action: StructuredAction, observation: Any) -> None:
        self.window.append((action, observation))


class MMOAgent:
    def __init__(self, agent_id: int, profile: AgentProfile, policy: Policy,
                 memory: MemoryConfig | None = None):
        self.agent_id = agent_id
        self.profile = profile
        self.policy = policy
        self.config = memory or MemoryConfig()
        self.stm = ShortTermMemory(self.config.stm_capacity)
        self.ltm = LongTermMemory(self.config)
        self.reflection = ReflectionState(self.config.reflection_period)
        self.last_feedback: ExecutionFeedback | None = None

    def context(self, observation: Observation, feedback: ExecutionFeedback | None = None,
                is_retry: bool = False, shop_price: int = 8, agents: tuple[int, ...] = ()) -> PromptContext:
        return PromptContext(
            agent=self.agent_id,
            profile=self.profile,
            observation=observation,
            stm=tuple(self.stm),
            ltm_reference=self.ltm.read(observation.embedding) if len(self.ltm) else None,
            reflection=self.reflection.sr_prev,
            feedback=feedback,
            is_retry=is_retry,
            shop_price=shop_price,
            agents=agents,
        )

    def decide(self, observation: Observation, feedback: ExecutionFeedback | None = None,
               is_retry: bool = False, **kw) -> StructuredAction:
        """Ask the backend for an action. :class:`BackendFailure` propagates."""
        return self.policy.decide(self.context(observation, feedback, is_retry, **kw))

    def remember(self, observation: Observation, action: StructuredAction) -> None:
        self.stm.push(observation, action)
        self.reflection.push(action, observation)

    def reflect(self) -> tuple[str, str | None]:
        """Returns (strategy, error). On backend failure the previous strategy is kept."""
        try:
            sr = self.policy.reflect(list(self.reflection.window), self.reflection.sr_prev)
        except BackendFailure as exc:
            return self.reflection.sr_prev, str(exc)
        self.reflection.sr_prev = sr
        return sr, None
