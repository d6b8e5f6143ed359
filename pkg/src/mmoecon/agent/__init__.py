"""Agent cognition: profiles, perception, memory and the decision loop."""

from .core import MMOAgent, ReflectionState, reward_of
from .memory import (
    LongTermMemory, MemoryConfig, MemoryRecord, SchemaMismatch, ShortTermMemory,
    ltm_decay, ltm_read, ltm_write, similarity,
)
from .observation import EMBEDDING_FIELDS, EMBEDDING_SIZE, Observation, parse_observation
from .profiles import DEFAULT_PROFILES, PROFILES_BY_NAME, AgentProfile, assign_profiles, discretize_trait

__all__ = [
    "MMOAgent", "ReflectionState", "reward_of", "LongTermMemory", "MemoryConfig", "MemoryRecord",
    "SchemaMismatch", "ShortTermMemory", "ltm_decay", "ltm_read", "ltm_write", "similarity",
    "EMBEDDING_FIELDS", "EMBEDDING_SIZE", "Observation", "parse_observation", "DEFAULT_PROFILES",
    "PROFILES_BY_NAME", "AgentProfile", "assign_profiles", "discretize_trait",
]
