from __future__ import annotations

import numpy as np
import pytest

from mmoecon.comms import ChatHub
from mmoecon.economy import ResourceLedger
from mmoecon.market import OrderBook
from mmoecon.sim.state import SimState
from mmoecon.world import KIND_CODES, Grid


def build_state(n_agents: int = 2, size: int = 9, resources=(), ledgers=None, positions=None,
                shop_price: int = 8, radius: int = 5) -> SimState:
    """A small hand-built world: ``resources`` is a list of (kind, (x, y))."""
    tiles = np.zeros((size, size), dtype=np.int8)
    placed = {"EXP": 0, "MAT": 0}
    for kind, (x, y) in resources:
        tiles[y, x] = KIND_CODES[kind]
        placed[kind] += 1
    grid = Grid(size, size, tiles, placed=placed)
    for a in range(n_agents):
        grid.place_agent(a, (positions or {}).get(a, (size // 2, size // 2)))
    ledgers = ledgers or {}
    return SimState(
        grid=grid,
        ledgers={a: ledgers.get(a, ResourceLedger(ccy=10)) for a in range(n_agents)},
        book=OrderBook(),
        comms=ChatHub(tuple(range(n_agents))),
        shop_price=shop_price,
        visibility_radius=radius,
    )


@pytest.fixture
def make_state():
    return build_state


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
