"""Simulated 2D lidar over tri-state grids.

The sensor is perfect: no range noise, no false returns.  Rays march
cell boundaries from the robot outward and stop at the first Occupied
truth cell, at the configured range, or at the map edge.  Sensing only
ever writes truth-consistent values, so an observed map is always sound
(every observed Free cell is Free in truth) and monotone (known cells
never revert to Unknown).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _fast
from .grid import CellIndex, CellState, GridMap, OutOfBounds, WorldPoint, world_to_cell

_TIE_EPS = 1e-12


class InvalidPose(ValueError):
    """The robot pose is outside the map or inside an obstacle."""


@dataclass
class LidarConfig:
    max_range: float = 12.0
    rays_per_scan: int = 360

    def __post_init__(self) -> None:
        if self.max_range <= 0:
            raise ValueError(f"max_range must be positive, got {self.max_range}")
        if self.rays_per_scan < 1:
            raise ValueError(f"rays_per_scan must be >= 1, got {self.rays_per_scan}")


@dataclass
class RobotState:
    pose: WorldPoint
    traveled: float = 0.0


def cast_ray(
    truth: GridMap,
    origin: WorldPoint,
    angle: float,
    max_range: float = 12.0,
) -> tuple[list[CellIndex], CellIndex | None]:
    """March one ray and report (traversed cells, hit cell or None).

    Traversed cells are every non-Occupied truth cell the ray enters
    before the stop, starting with the origin cell.  hit is None when the
    ray ran out of range or left the map.  On an exact corner crossing
    the x-neighbour is visited before the diagonal cell.
    """
    start = world_to_cell(truth, origin)
    cells = truth.cells
    h, w = cells.shape
    r, c = start
    if cells[r, c] == int(CellState.OCCUPIED):
        return [], start
    traversed = [start]
    dx, dy = math.cos(angle), math.sin(angle)
    # work in the grid frame so cell boundaries sit at multiples of res
    x0 = origin.x - truth.origin.x
    y0 = origin.y - truth.origin.y
    res = truth.resolution
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    tdx = abs(res / dx) if dx != 0 else math.inf
    tdy = abs(res / dy) if dy != 0 else math.inf
    if dx > 0:
        tmx = ((c + 1) * res - x0) / dx
    elif dx < 0:
        tmx = (c * res - x0) / dx
    else:
        tmx = math.inf
    if dy > 0:
        tmy = ((r + 1) * res - y0) / dy
    elif dy < 0:
        tmy = (r * res - y0) / dy
    else:
        tmy = math.inf
    while True:
        corner = False
        if tmx < tmy - _TIE_EPS:
            t = tmx
            tmx += tdx
            dr, dc = 0, sx
        elif tmy < tmx - _TIE_EPS:
            t = tmy
            tmy += tdy
            dr, dc = sy, 0
        else:
            t = tmx
            tmx += tdx
            tmy += tdy
            dr, dc = sy, sx
            corner = True
        if t >= max_range - _TIE_EPS:
            return traversed, None
        if corner:
            cc = c + sx
            if cc < 0 or cc >= w:
                return traversed, None
            if cells[r, cc] == int(CellState.OCCUPIED):
                return traversed, CellIndex(r, cc)
            traversed.append(CellIndex(r, cc))
        r += dr
        c += dc
        if r < 0 or r >= h or c < 0 or c >= w:
            return traversed, None
        if cells[r, c] == int(CellState.OCCUPIED):
            return traversed, CellIndex(r, c)
        traversed.append(CellIndex(r, c))


def scan_angles(lidar: LidarConfig) -> np.ndarray:
    return np.arange(lidar.rays_per_scan) * (2.0 * math.pi / lidar.rays_per_scan)


def sense(truth: GridMap, observed: GridMap, robot: RobotState, lidar: LidarConfig) -> int:
    """Run a full scan, folding the returns into `observed` in place.

    Traversed cells become Free and hit cells Occupied.  Returns the
    number of cells that changed, so callers can tell an informative scan
    from a no-op; sensing twice from the same pose changes nothing.
    """
    try:
        cell = world_to_cell(truth, robot.pose)
    except OutOfBounds:
        raise InvalidPose(f"robot pose {tuple(robot.pose)} is outside the map") from None
    if truth.cells[cell.row, cell.col] == int(CellState.OCCUPIED):
        raise InvalidPose(f"robot pose {tuple(robot.pose)} is inside an obstacle cell {tuple(cell)}")
    if observed.cells.shape != truth.cells.shape:
        raise ValueError("observed map geometry does not match truth")
    angles = scan_angles(lidar)
    return int(
        _fast.sense_kernel(
            truth.cells,
            observed.cells,
            robot.pose.x - truth.origin.x,
            robot.pose.y - truth.origin.y,
            np.cos(angles),
            np.sin(angles),
            lidar.max_range,
            truth.resolution,
        )
    )


def new_observed(truth: GridMap) -> GridMap:
    """An all-Unknown map with the same geometry as truth."""
    return GridMap(
        np.full_like(truth.cells, int(CellState.UNKNOWN)),
        truth.resolution,
        truth.origin,
    )
