"""Grid pathfinding: optimal A*, noisy A*, all-cells cost fields, and
observation-compliance-constrained optimal costs.

These are the cost oracles behind both symbolic recognizers and the dataset
generator. Everything here is deterministic given its inputs; the noisy
planner carries its randomness in :class:`NoiseParams`.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import Cell, GridMap


class NoPathError(Exception):
    """No path exists between the requested endpoints."""


class NoCompliantPlanError(Exception):
    """No path embeds the observation sequence in order."""


@dataclass(frozen=True)
class NoiseParams:
    """Parameters of the over-estimating heuristic used to generate noisy paths.

    With probability ``epsilon`` a heuristic evaluation is inflated by
    ``delta``, otherwise the admissible value is returned. ``seed`` fixes the
    draw sequence, so the same params always produce the same path.
    """

    epsilon: float = 0.25
    delta: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass
class Path:
    """A start-to-end walk of grid cells; cost is the step count."""

    cells: list[Cell]

    @property
    def cost(self) -> int:
        return len(self.cells) - 1

    @property
    def start(self) -> Cell:
        return self.cells[0]

    @property
    def end(self) -> Cell:
        return self.cells[-1]


@dataclass
class CostField:
    """Optimal cost-to-goal for every cell; np.inf marks unreachable cells."""

    goal: Cell
    values: np.ndarray  # (height, width) float array

    def cost(self, cell: Cell) -> float:
        x, y = cell
        return float(self.values[y, x])


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _check_endpoints(grid: GridMap, start: Cell, goal: Cell) -> None:
    if not grid.is_passable(start):
        raise ValueError(f"start {start} is blocked or out of bounds")
    if not grid.is_passable(goal):
        raise ValueError(f"goal {goal} is blocked or out of bounds")


def _astar(grid: GridMap, start: Cell, goal: Cell, h: Callable[[Cell], float]) -> Path:
    # Tie-break: lower f, then higher g, then push order (neighbors are pushed
    # in N,E,S,W order), so runs are reproducible.
    counter = itertools.count()
    g_cost: dict[Cell, int] = {start: 0}
    parent: dict[Cell, Cell | None] = {start: None}
    open_heap: list[tuple[float, int, int, Cell]] = [(h(start), 0, next(counter), start)]
    closed: set[Cell] = set()
    while open_heap:
        _, _, _, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        closed.add(current)
        if current == goal:
            cells = []
            node: Cell | None = current
            while node is not None:
                cells.append(node)
                node = parent[node]
            cells.reverse()
            return Path(cells)
        new_g = g_cost[current] + 1
        for nb in grid.neighbors(current):
            if nb in closed:
                continue
            if new_g < g_cost.get(nb, np.inf):
                g_cost[nb] = new_g
                parent[nb] = current
                heapq.heappush(open_heap, (new_g + h(nb), -new_g, next(counter), nb))
    raise NoPathError(f"no path from {start} to {goal}")


def astar(grid: GridMap, start: Cell, goal: Cell) -> Path:
    """Minimum-cost path via A* with the Manhattan heuristic.

    Deterministic for a given map and endpoints. Raises :class:`NoPathError`
    when the goal is unreachable.
    """
    _check_endpoints(grid, start, goal)
    return _astar(grid, start, goal, lambda c: manhattan(c, goal))


def noisy_astar(grid: GridMap, start: Cell, goal: Cell, noise: NoiseParams) -> Path:
    """A* run with an over-estimating heuristic, yielding plausible suboptimal walks.

    The perturbation is drawn independently at every heuristic evaluation from
    the generator seeded by ``noise.seed``; with ``epsilon == 0`` the run is
    identical to :func:`astar`.
    """
    _check_endpoints(grid, start, goal)
    rng = np.random.default_rng(noise.seed)

    def h(c: Cell) -> float:
        base = manhattan(c, goal)
        if rng.random() < noise.epsilon:
            return base + noise.delta
        return base

    return _astar(grid, start, goal, h)


def cost_field(grid: GridMap, goal: Cell) -> CostField:
    """Optimal cost-to-goal for every cell, computed by one breadth-first sweep.

    Unit step costs make BFS exact. Blocked or unreachable cells hold np.inf.
    """
    if not grid.is_passable(goal):
        raise ValueError(f"goal {goal} is blocked or out of bounds")
    values = np.full((grid.height, grid.width), np.inf)
    gx, gy = goal
    values[gy, gx] = 0.0
    queue = deque([goal])
    while queue:
        current = queue.popleft()
        base = values[current[1], current[0]] + 1.0
        for nx, ny in grid.neighbors(current):
            if base < values[ny, nx]:
                values[ny, nx] = base
                queue.append((nx, ny))
    values.setflags(write=False)
    return CostField(goal=goal, values=values)


def _compliance_costs(
    grid: GridMap, start: Cell, goal: Cell, obs: Sequence[Cell]
) -> tuple[float, float]:
    """Min costs of paths start->goal that do / do not embed ``obs`` in order.

    Breadth-first search over (cell, matched-prefix-length) with forced
    advancement of the match index: stepping onto the next unmatched observed
    cell always advances it. Greedy matching decides subsequence embedding
    exactly, so a path complies iff it reaches match length ``len(obs)``.
    Either cost may be np.inf.
    """
    _check_endpoints(grid, start, goal)
    if len(obs) == 0:
        raise ValueError("observation sequence must be non-empty")
    for cell in obs:
        if not grid.is_passable(cell):
            raise ValueError(f"observed cell {cell} is blocked or out of bounds")

    n_obs = len(obs)
    dist = np.full((n_obs + 1, grid.height, grid.width), -1, dtype=np.int32)
    k0 = 1 if start == obs[0] else 0
    dist[k0, start[1], start[0]] = 0
    queue = deque([(start, k0)])
    compliant = np.inf
    noncompliant = np.inf
    while queue:
        (cx, cy), k = queue.popleft()
        here = dist[k, cy, cx]
        if (cx, cy) == goal:
            if k == n_obs:
                compliant = min(compliant, float(here))
            else:
                noncompliant = min(noncompliant, float(here))
            if np.isfinite(compliant) and np.isfinite(noncompliant):
                break
        for nx, ny in grid.neighbors((cx, cy)):
            nk = k + 1 if k < n_obs and (nx, ny) == obs[k] else k
            if dist[nk, ny, nx] < 0:
                dist[nk, ny, nx] = here + 1
                queue.append(((nx, ny), nk))
    return compliant, noncompliant


def compliant_cost(grid: GridMap, start: Cell, goal: Cell, obs: Sequence[Cell]) -> int:
    """Minimum cost over paths start->goal whose cell sequence embeds ``obs``.

    Raises :class:`NoCompliantPlanError` when no such path exists.
    """
    cost, _ = _compliance_costs(grid, start, goal, obs)
    if not np.isfinite(cost):
        raise NoCompliantPlanError(f"no path from {start} to {goal} embeds the observations")
    return int(cost)


def noncompliant_cost(grid: GridMap, start: Cell, goal: Cell, obs: Sequence[Cell]) -> float:
    """Minimum cost over paths start->goal that do NOT embed ``obs``.

    Returns np.inf (a value, not a fault) when every start->goal path embeds
    the observations.
    """
    _, cost = _compliance_costs(grid, start, goal, obs)
    return cost
