"""Grid map with collectible EXP/MAT tiles, scenario generation and navigation.

Coordinates are ``(x, y)`` tuples; ``tiles[y, x]`` holds the tile content.
Movement is 4-connected with unit cost and the map has no obstacles.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .actions import TASK
from .economy import ExecutionFeedback, ResourceLedger

Coord = tuple[int, int]

EMPTY = 0
EXP = 1
MAT = 2
KIND_NAMES = {EXP: "EXP", MAT: "MAT"}
KIND_CODES = {v: k for k, v in KIND_NAMES.items()}

# E, S, W, N
DIRECTIONS: tuple[Coord, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))

DENSITY_PRESETS = {"rich": 0.70, "moderate": 0.50, "scarce": 0.30}


class GridTooSmall(ValueError):
    pass


@dataclass
class ScenarioConfig:
    density_fraction: float = 0.70
    agents: int = 10
    target_upgrades_per_agent: int = 10
    grid_width: int = 25
    grid_height: int = 25
    visibility_radius: int = 5
    explore_cap: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.density_fraction <= 1:
            raise ValueError("density_fraction must lie in (0, 1]")
        if self.agents < 1 or self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("agents and grid dimensions must be positive")
        if self.target_upgrades_per_agent < 0 or self.visibility_radius < 0 or self.explore_cap < 0:
            raise ValueError("counts must be non-negative")

    @classmethod
    def preset(cls, name: str, **overrides) -> ScenarioConfig:
        try:
            fraction = DENSITY_PRESETS[name.lower()]
        except KeyError:
            raise ValueError(f"unknown scenario {name!r}; expected one of {sorted(DENSITY_PRESETS)}") from None
        return cls(density_fraction=fraction, **overrides)

    @property
    def resource_budget(self) -> int:
        return self.agents * self.target_upgrades_per_agent

    @property
    def tiles_per_kind(self) -> int:
        # tolerate float noise such as 0.7 * 100 = 70.00000000000001 / 69.999...
        return int(np.floor(self.density_fraction * self.resource_budget + 1e-9))


@dataclass
class Grid:
    width: int
    height: int
    tiles: np.ndarray
    agent_positions: dict[int, Coord] = field(default_factory=dict)
    placed: dict[str, int] = field(default_factory=dict)
    collected: dict[str, int] = field(default_factory=lambda: {"EXP": 0, "MAT": 0})
    # per-agent walked cells, used to steer exploration
    visited: dict[int, set[Coord]] = field(default_factory=dict)

    def in_bounds(self, pos: Coord) -> bool:
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height

    def kind_at(self, pos: Coord) -> str | None:
        return KIND_NAMES.get(int(self.tiles[pos[1], pos[0]]))

    def remaining(self) -> dict[str, int]:
        return {name: int(np.count_nonzero(self.tiles == code)) for code, name in KIND_NAMES.items()}

    def resource_coords(self) -> list[tuple[str, int, int]]:
        ys, xs = np.nonzero(self.tiles)
        return [(KIND_NAMES[int(self.tiles[y, x])], int(x), int(y)) for y, x in zip(ys, xs)]

    def place_agent(self, agent: int, pos: Coord) -> None:
        if not self.in_bounds(pos):
            raise ValueError(f"position {pos} out of bounds")
        self.agent_positions[agent] = pos
        self.visited.setdefault(agent, set()).add(pos)

    def _window(self, pos: Coord, radius: int) -> tuple[int, int, np.ndarray]:
        x0, y0 = max(pos[0] - radius, 0), max(pos[1] - radius, 0)
        x1, y1 = min(pos[0] + radius + 1, self.width), min(pos[1] + radius + 1, self.height)
        return x0, y0, self.tiles[y0:y1, x0:x1]

    def any_resource_within(self, pos: Coord, radius: int) -> bool:
        return bool(self._window(pos, radius)[2].any())

    def copy(self) -> Grid:
        return Grid(
            self.width,
            self.height,
            self.tiles.copy(),
            dict(self.agent_positions),
            dict(self.placed),
            dict(self.collected),
            {a: set(v) for a, v in self.visited.items()},
        )


def generate_world(config: ScenarioConfig) -> Grid:
    """Scatter ``floor(density * budget)`` EXP and as many MAT tiles uniformly."""
    n = config.tiles_per_kind
    cells = config.grid_width * config.grid_height
    if 2 * n > cells:
        raise GridTooSmall(f"{2 * n} resource tiles do not fit on a {config.grid_width}x{config.grid_height} grid")
    tiles = np.zeros((config.grid_height, config.grid_width), dtype=np.int8)
    rng = np.random.default_rng(config.seed)
    chosen = rng.choice(cells, size=2 * n, replace=False)
    flat = tiles.reshape(-1)
    flat[chosen[:n]] = EXP
    flat[chosen[n:]] = MAT
    return Grid(config.grid_width, config.grid_height, tiles, placed={"EXP": n, "MAT": n})


def manhattan(a: Coord, b: Coord) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def visible_resources(grid: Grid, pos: Coord, radius: int) -> list[tuple[str, Coord, int]]:
    """Resource tiles within Chebyshev ``radius``, nearest first, ties by (y, x).

    On an open 4-connected grid the path distance is the Manhattan distance.
    """
    if not grid.in_bounds(pos):
        raise ValueError(f"position {pos} out of bounds")
    x0, y0, window = grid._window(pos, radius)
    ys, xs = np.nonzero(window)
    found = []
    for y, x in zip(ys.tolist(), xs.tolist()):
        c = (x + x0, y + y0)
        found.append((KIND_NAMES[int(window[y, x])], c, manhattan(pos, c)))
    found.sort(key=lambda r: (r[2], r[1][1], r[1][0]))
    return found


def _neighbors(grid: Grid, pos: Coord, order: tuple[Coord, ...] = DIRECTIONS) -> list[Coord]:
    x, y = pos
    w, h = grid.width, grid.height
    return [(x + dx, y + dy) for dx, dy in order if 0 <= x + dx < w and 0 <= y + dy < h]


def astar(grid: Grid, start: Coord, goal: Coord) -> list[Coord]:
    """Shortest 4-connected path from ``start`` to ``goal``, excluding ``start``."""
    if start == goal:
        return []
    counter = 0
    frontier = [(manhattan(start, goal), 0, counter, start)]
    came_from: dict[Coord, Coord] = {}
    best_g = {start: 0}
    while frontier:
        _, g, _, cur = heapq.heappop(frontier)
        if cur == goal:
            path = [cur]
            while path[-1] in came_from and came_from[path[-1]] != start:
                path.append(came_from[path[-1]])
            path.reverse()
            return path
        if g > best_g[cur]:
            continue
        for nxt in _neighbors(grid, cur):
            ng = g + 1
            if ng < best_g.get(nxt, 1 << 30):
                best_g[nxt] = ng
                came_from[nxt] = cur
                counter += 1
                heapq.heappush(frontier, (ng + manhattan(nxt, goal), ng, counter, nxt))
    return []


@dataclass(frozen=True)
class TaskPlan:
    path: tuple[Coord, ...]
    target: Coord | None


def _direction_order(agent: int) -> tuple[Coord, ...]:
    k = agent % len(DIRECTIONS)
    return DIRECTIONS[k:] + DIRECTIONS[:k]


def _bfs_to_unvisited(grid: Grid, start: Coord, visited: set[Coord], order) -> list[Coord]:
    if len(visited) >= grid.width * grid.height:
        return []
    parent: dict[Coord, Coord | None] = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur not in visited:
            path = [cur]
            while parent[path[-1]] != start and parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        for nxt in _neighbors(grid, cur, order):
            if nxt not in parent:
                parent[nxt] = cur
                queue.append(nxt)
    return []


def explore_path(grid: Grid, agent: int, radius: int, cap: int) -> list[Coord]:
    """Depth-first walk of at most ``cap`` tiles toward cells the agent has not
    walked yet. Stops early once a resource comes into view."""
    order = _direction_order(agent)
    pos = grid.agent_positions[agent]
    seen = set(grid.visited.get(agent, ()))
    seen.add(pos)
    path: list[Coord] = []
    cur = pos
    while len(path) < cap:
        step = next((n for n in _neighbors(grid, cur, order) if n not in seen), None)
        if step is not None:
            hops = [step]
        else:
            hops = _bfs_to_unvisited(grid, cur, seen, order)
            if not hops:
                break
        for hop in hops[: cap - len(path)]:
            path.append(hop)
            seen.add(hop)
            cur = hop
        if grid.any_resource_within(cur, radius):
            break
    return path


def plan_task(grid: Grid, agent: int, radius: int = 5, explore_cap: int = 10) -> TaskPlan:
    pos = grid.agent_positions[agent]
    nearby = visible_resources(grid, pos, radius)
    if nearby:
        target = nearby[0][1]
        return TaskPlan(tuple(astar(grid, pos, target)), target)
    return TaskPlan(tuple(explore_path(grid, agent, radius, explore_cap)), None)


def execute_task(grid: Grid, agent: int, plan: TaskPlan, ledger: ResourceLedger) -> ExecutionFeedback:
    """Walk the plan; collect the target tile if there is one. LAB += tiles walked."""
    visited = grid.visited.setdefault(agent, set())
    pos = grid.agent_positions[agent]
    for step in plan.path:
        if not grid.in_bounds(step) or manhattan(pos, step) != 1:
            raise ValueError(f"plan step {step} is not adjacent to {pos}")
        pos = step
        visited.add(pos)
    grid.agent_positions[agent] = pos
    ledger.lab += len(plan.path)
    if plan.target is None:
        return ExecutionFeedback.fail(TASK, "no resource found nearby")
    if pos != plan.target:
        raise ValueError("plan does not end on its target")
    kind = grid.kind_at(pos)
    if kind is None:
        return ExecutionFeedback.fail(TASK, "resource already taken")
    grid.tiles[pos[1], pos[0]] = EMPTY
    grid.collected[kind] += 1
    setattr(ledger, kind.lower(), getattr(ledger, kind.lower()) + 1)
    return ExecutionFeedback.ok(TASK)
