"""Grid shortest paths and the two cost views used by the planners.

Motion is 8-connected with octile costs (one cell per axial step, sqrt(2)
per diagonal) and no corner cutting: a diagonal move needs both adjacent
axial cells passable. Costs are returned in meters. Two traversability
predicates exist on purpose: exploration planning walks Free cells only,
while estimated costs over a predicted map treat Unknown as traversable
so unexplored space looks optimistically reachable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from . import _fast
from .grid import CellIndex, CellState, GridMap
from .prediction import PredictedMap


class Unreachable(Exception):
    """No traversable path to the goal.

    explored is the number of cells the search reached before giving up.
    """

    def __init__(self, explored: int):
        super().__init__(f"goal unreachable after exploring {explored} cells")
        self.explored = explored


@dataclass
class PathResult:
    cost: float  # meters
    cells: list[CellIndex]  # start..goal inclusive


def traversable_free(state: int) -> bool:
    """Exploration-time motion: only observed Free cells are safe."""
    return state == CellState.FREE


def traversable_optimistic(state: int) -> bool:
    """Estimation-time motion: anything not known Occupied may be walked."""
    return state != CellState.OCCUPIED


def passable_mask(
    grid: GridMap, traversable: Callable[[int], bool], inflate: int = 0
) -> np.ndarray:
    """Boolean passability per cell; inflate > 0 additionally blocks cells
    within that many cells (Euclidean) of any non-traversable cell."""
    lut = np.zeros(256, dtype=bool)
    for state in (CellState.OCCUPIED, CellState.UNKNOWN, CellState.FREE):
        lut[int(state)] = bool(traversable(int(state)))
    mask = lut[grid.cells]
    if inflate > 0:
        # the ring outside the map blocks too, same as everywhere else
        padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
        padded[1:-1, 1:-1] = mask
        mask = ndimage.distance_transform_edt(padded)[1:-1, 1:-1] > inflate
    return mask


def _check_bounds(grid: GridMap, cell: CellIndex, name: str) -> None:
    if not grid.in_bounds((int(cell[0]), int(cell[1]))):
        raise IndexError(f"{name} {tuple(cell)} outside {grid.height}x{grid.width} map")


def _reconstruct(parent: np.ndarray, start: CellIndex, goal: CellIndex) -> list[CellIndex]:
    w = parent.shape[1]
    cells = [CellIndex(int(goal[0]), int(goal[1]))]
    flat = parent[int(goal[0]), int(goal[1])]
    while flat >= 0:
        cells.append(CellIndex(int(flat) // w, int(flat) % w))
        flat = parent[cells[-1].row, cells[-1].col]
    cells.reverse()
    assert cells[0] == CellIndex(int(start[0]), int(start[1]))
    return cells


def shortest_path(
    grid: GridMap,
    start: CellIndex,
    goal: CellIndex,
    traversable: Callable[[int], bool] = traversable_free,
    inflate: int = 0,
) -> PathResult:
    """Minimum-cost 8-connected path from start to goal in meters.

    Ties between equal f-cost nodes expand in (row, col) order, so equal
    problems yield identical paths. Raises Unreachable when the goal
    cannot be reached (including a blocked start or goal).
    """
    _check_bounds(grid, start, "start")
    _check_bounds(grid, goal, "goal")
    mask = passable_mask(grid, traversable, inflate)
    cost_cells, parent = _fast.astar_kernel(
        mask, int(start[0]), int(start[1]), int(goal[0]), int(goal[1])
    )
    if not np.isfinite(cost_cells):
        explored = int((parent >= 0).sum())
        if mask[int(start[0]), int(start[1])]:
            explored += 1
        raise Unreachable(explored)
    return PathResult(float(cost_cells) * grid.resolution, _reconstruct(parent, start, goal))


def nav_cost(observed: GridMap, a: CellIndex, b: CellIndex) -> float:
    """Navigation cost in meters over observed Free space only."""
    return shortest_path(observed, a, b, traversable_free).cost


def optimistic_cost(predicted: PredictedMap, a: CellIndex, b: CellIndex) -> float:
    """Estimated cost in meters over the predicted map, Unknown included;
    only cells known or predicted Occupied block."""
    return shortest_path(predicted.map, a, b, traversable_optimistic).cost


@dataclass
class CostField:
    """Single-source distances (meters) and the search tree that made
    them; parent holds flat indices, -1 at the source and off-tree."""

    distance: np.ndarray
    parent: np.ndarray
    source: CellIndex
    resolution: float

    def cost_to(self, cell: CellIndex) -> float:
        return float(self.distance[int(cell[0]), int(cell[1])])

    def path_to(self, cell: CellIndex) -> list[CellIndex]:
        if not np.isfinite(self.cost_to(cell)):
            raise Unreachable(int(np.isfinite(self.distance).sum()))
        return _reconstruct(self.parent, self.source, cell)


def cost_field(
    grid: GridMap,
    source: CellIndex,
    traversable: Callable[[int], bool] = traversable_free,
    inflate: int = 0,
) -> CostField:
    """All shortest-path costs from one source, for scoring many goals in
    one sweep. Same movement rules and units as shortest_path."""
    _check_bounds(grid, source, "source")
    mask = passable_mask(grid, traversable, inflate)
    dist, parent = _fast.dijkstra_field(mask, int(source[0]), int(source[1]))
    return CostField(
        distance=dist * grid.resolution,
        parent=parent,
        source=CellIndex(int(source[0]), int(source[1])),
        resolution=grid.resolution,
    )
