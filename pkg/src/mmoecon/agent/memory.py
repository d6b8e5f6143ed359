"""Numeric-aware short- and long-term memory.

Long-term records carry an importance score. Scores are written by
discounting a positive reward back over the preceding short-term trajectory,
merged into near-duplicate records, and decayed exponentially every step
until they fall under the eviction threshold.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from ..actions import StructuredAction


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MemoryConfig:
    stm_capacity: int = 10
    write_window: int = 5
    gamma: float = 0.9
    accumulation_sim_threshold: float = 0.9
    strength: float = 20.0
    eviction_threshold: float = 0.2
    reflection_period: int = 10
    ltm_capacity: int = 20

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.strength <= 0:
            raise ValueError("strength must be positive")
        for name in ("accumulation_sim_threshold", "eviction_threshold"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if min(self.stm_capacity, self.ltm_capacity, self.reflection_period) < 1 or self.write_window < 0:
            raise ValueError("capacities and periods must be positive")

    @property
    def decay_factor(self) -> float:
        return math.exp(-1.0 / self.strength)


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise SchemaMismatch("embeddings must be 1-D")
    if (v < 0).any():
        raise ValueError("embedding components must be non-negative")
    return v


def similarity(x, y) -> float:
    """``1 - max_i |x_i - y_i| / max(x_i, y_i)``; a component with both sides 0 contributes 0."""
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape:
        raise SchemaMismatch(f"embedding lengths differ: {x.shape[0]} vs {y.shape[0]}")
    return float(similarity_to_many(x, y[None, :])[0])


def similarity_to_many(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Row-wise similarity of ``query`` against every row of ``matrix``."""
    if matrix.shape[1:] != query.shape:
        raise SchemaMismatch("embedding lengths differ")
    if matrix.shape[1] == 0:
        return np.ones(matrix.shape[0])
    top = np.maximum(matrix, query)
    diff = np.abs(matrix - query)
    ratio = np.divide(diff, top, out=np.zeros_like(diff), where=top > 0)
    return 1.0 - ratio.max(axis=1)


@dataclass(eq=False)
class MemoryRecord:
    embedding: np.ndarray
    action: StructuredAction
    score: float
    observation: Any = None  # the Observation the record came from, if kept
    seq: int = 0
    written_step: int | None = None

    @property
    def obs_text(self) -> str:
        return getattr(self.observation, "text", "")

    def to_dict(self) -> dict:
        return {"seq": self.seq, "score": self.score, "action": self.action.to_dict(),
                "embedding": [float(v) for v in self.embedding], "written_step": self.written_step}


class ShortTermMemory:
    """Ring of the most recent ``(observation, action)`` pairs."""

    def __init__(self, capacity: int = 10):
        self.capacity = capacity
        self._items: deque[tuple[Any, StructuredAction]] = deque(maxlen=capacity)

    def push(self, observation, action: StructuredAction) -> None:
        self._items.append((observation, action))

    def recent(self, m: int) -> list[tuple[Any, StructuredAction]]:
        return list(self._items)[-m:] if m > 0 else []

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def clear(self) -> None:
        self._items.clear()


@dataclass
class LongTermMemory:
    config: MemoryConfig = field(default_factory=MemoryConfig)
    records: list[MemoryRecord] = field(default_factory=list)
    _seq: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def read(self, query) -> MemoryRecord | None:
        """argmax of similarity + score; ties go to the most recently written record."""
        if not self.records:
            return None
        q = _as_vector(query)
        sims = similarity_to_many(q, np.stack([r.embedding for r in self.records]))
        best, best_val = None, -math.inf
        for rec, sim in zip(self.records, sims):
            val = sim + rec.score
            if val > best_val or (val == best_val and rec.seq > best.seq):
                best, best_val = rec, val
        return best

    def add(self, embedding, action: StructuredAction, score: float, observation=None,
            step: int | None = None) -> tuple[str, MemoryRecord | None]:
        """Merge ``score`` into the first similar record, or insert a new one.

        Returns ``("accumulated" | "inserted" | "dropped", record)``.
        """
        emb = _as_vector(embedding)
        if self.records:
            sims = similarity_to_many(emb, np.stack([r.embedding for r in self.records]))
            for rec, sim in zip(self.records, sims):
                if sim >= self.config.accumulation_sim_threshold:
                    rec.score += score
                    return "accumulated", rec
        if score < self.config.eviction_threshold:
            return "dropped", None
        rec = MemoryRecord(emb, action, score, observation, self._seq, step)
        self._seq += 1
        self.records.append(rec)
        while len(self.records) > self.config.ltm_capacity:
            victim = min(self.records, key=lambda r: (r.score, r.seq))
            self.records.remove(victim)
        return ("inserted", rec) if rec in self.records else ("dropped", None)

    def write(self, stm: ShortTermMemory | Sequence, reward: float,
              step: int | None = None) -> list[tuple[str, MemoryRecord | None, float]]:
        """Credit the ``write_window`` trajectories before the rewarded step.

        The entry ``k`` places back from the rewarded step gets ``reward * gamma**k``.
        """
        if reward <= 0:
            return []
        items = stm.recent(self.config.write_window) if isinstance(stm, ShortTermMemory) \
            else list(stm)[-self.config.write_window:]
        out = []
        n = len(items)
        for pos, (obs, action) in enumerate(items):  # oldest first
            back = n - pos
            score = reward * self.config.gamma ** back
            emb = obs.embedding if hasattr(obs, "embedding") else obs
            outcome, rec = self.add(emb, action, score, obs if hasattr(obs, "embedding") else None, step)
            out.append((outcome, rec, score))
        return out

    def decay(self) -> list[MemoryRecord]:
        """One step of forgetting; returns the evicted records."""
        f = self.config.decay_factor
        for r in self.records:
            r.score *= f
        evicted = [r for r in self.records if r.score < self.config.eviction_threshold]
        if evicted:
            self.records = [r for r in self.records if r.score >= self.config.eviction_threshold]
        return evicted

    def dump(self) -> list[dict]:
        return [r.to_dict() for r in self.records]


def ltm_read(ltm: LongTermMemory, query) -> MemoryRecord | None:
    return ltm.read(query)


def ltm_write(ltm: LongTermMemory, stm, reward: float, config: MemoryConfig | None = None,
              step: int | None = None) -> LongTermMemory:
    if config is not None and config is not ltm.config:
        ltm.config = config
    ltm.write(stm, reward, step)
    return ltm


def ltm_decay(ltm: LongTermMemory, config: MemoryConfig | None = None) -> LongTermMemory:
    if config is not None and config is not ltm.config:
        ltm.config = config
    ltm.decay()
    return ltm


def write_scores(reward: float, gamma: float, m: int, available: int | None = None) -> list[float]:
    """Scores for the entries 1..m steps back (nearest first)."""
    k = m if available is None else min(m, available)
    return [reward * gamma ** back for back in range(1, k + 1)]


def render_stm(entries: Iterable[tuple[Any, StructuredAction]]) -> str:
    lines = []
    for obs, action in entries:
        inv = getattr(obs, "inventory", None)
        head = f"step {obs.step}: " if hasattr(obs, "step") else ""
        state = (f"(EXP {inv.exp}, MAT {inv.mat}, TOK {inv.tok}, CCY {inv.ccy}, CAP {inv.cap}) "
                 if inv is not None else "")
        lines.append(f"{head}{state}-> {action}")
    return "\n".join(lines) if lines else "none"
