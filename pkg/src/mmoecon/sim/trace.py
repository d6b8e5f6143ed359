"""JSON-lines trace of everything that happens in a run."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, TextIO

EVENT_KINDS = (
    "World", "Decision", "Feedback", "Trade", "Chat", "Reflection", "MemoryWrite",
    "MemoryDump", "Ledger", "Warning",
)


class TraceWriter:
    """Appends events with a running sequence number. Keeps them in memory
    when ``keep`` is set (handy in tests)."""

    def __init__(self, path: str | Path | None = None, repetition: int = 0, keep: bool = False):
        self.repetition = repetition
        self.events: list[dict[str, Any]] | None = [] if keep else None
        self._fh: TextIO | None = None
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", encoding="utf-8", newline="\n")
        self._seq = 0
        self.counts: dict[str, int] = {}

    def emit(self, step: int, agent: int | None, kind: str, payload: Any) -> None:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind {kind!r}")
        event = {"repetition": self.repetition, "step": step, "seq": self._seq,
                 "agent": agent, "kind": kind, "payload": payload}
        self._seq += 1
        self.counts[kind] = self.counts.get(kind, 0) + 1
        if self.events is not None:
            self.events.append(event)
        if self._fh is not None:
            self._fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> TraceWriter:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
