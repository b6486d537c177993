"""Tri-state occupancy grids and the file formats built on them.

Every map in the stack is a byte grid where a cell is Occupied, Unknown
or Free.  Grids are row-major numpy arrays with row 0 at the minimum-y
edge of the world, so array rows and world y grow in the same direction.
Consumers that need a boundary condition treat out-of-bounds as Occupied.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np


class CellState(IntEnum):
    """Byte values a grid cell may take."""

    OCCUPIED = 0
    UNKNOWN = 100
    FREE = 255


_VALID_BYTES = frozenset(int(s) for s in CellState)


class OutOfBounds(ValueError):
    """A world point or cell index fell outside the grid."""


class EmptyRegion(ValueError):
    """A requested sub-region has no extent."""


class CellIndex(NamedTuple):
    row: int
    col: int


class WorldPoint(NamedTuple):
    x: float
    y: float


@dataclass
class GridMap:
    """A 2D byte grid plus the transform tying it to world coordinates.

    origin is the world position of the (0, 0) cell corner, i.e. the
    minimum-x / minimum-y corner of the grid.
    """

    cells: np.ndarray
    resolution: float = 0.2
    origin: WorldPoint = field(default_factory=lambda: WorldPoint(0.0, 0.0))

    def __post_init__(self) -> None:
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.ndim != 2 or self.cells.shape[0] < 1 or self.cells.shape[1] < 1:
            raise ValueError(f"grid must be 2D with at least one cell, got shape {self.cells.shape}")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        bad = ~np.isin(self.cells, (0, 100, 255))
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValueError(f"cell ({r},{c}) holds {self.cells[r, c]}, not a valid state byte")
        self.origin = WorldPoint(float(self.origin[0]), float(self.origin[1]))

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, idx: tuple[int, int]) -> bool:
        r, c = idx
        return 0 <= r < self.height and 0 <= c < self.width

    def copy(self) -> "GridMap":
        return GridMap(self.cells.copy(), self.resolution, self.origin)


def world_to_cell(grid: GridMap, p: tuple[float, float]) -> CellIndex:
    """Map a world point to the cell containing it.

    Coordinates are floored, so a point exactly on a cell's min edge
    belongs to that cell and a point on the grid's max edge is outside.
    """
    col = math.floor((p[0] - grid.origin.x) / grid.resolution)
    row = math.floor((p[1] - grid.origin.y) / grid.resolution)
    if not grid.in_bounds((row, col)):
        raise OutOfBounds(f"point ({p[0]}, {p[1]}) maps to cell ({row}, {col}) outside {grid.height}x{grid.width} grid")
    return CellIndex(row, col)


def cell_to_world(grid: GridMap, idx: tuple[int, int]) -> WorldPoint:
    """World coordinates of a cell's center."""
    row, col = idx
    if not grid.in_bounds((row, col)):
        raise OutOfBounds(f"cell ({row}, {col}) outside {grid.height}x{grid.width} grid")
    return WorldPoint(
        grid.origin.x + (col + 0.5) * grid.resolution,
        grid.origin.y + (row + 0.5) * grid.resolution,
    )


_N4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_N8 = _N4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def flood_fill(
    grid: GridMap,
    seed: tuple[int, int],
    passable: Iterable[int],
    connectivity: int = 4,
) -> set[CellIndex]:
    """BFS the connected component of `seed` over cells in `passable` states.

    Returns an empty set when the seed itself is not passable.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    offsets = _N4 if connectivity == 4 else _N8
    allowed = {int(s) for s in passable}
    seed = CellIndex(*seed)
    if not grid.in_bounds(seed):
        raise OutOfBounds(f"seed {tuple(seed)} outside {grid.height}x{grid.width} grid")
    cells = grid.cells
    if int(cells[seed.row, seed.col]) not in allowed:
        return set()
    h, w = cells.shape
    seen = np.zeros((h, w), dtype=bool)
    seen[seed.row, seed.col] = True
    out: set[CellIndex] = {seed}
    queue: deque[tuple[int, int]] = deque([seed])
    while queue:
        r, c = queue.popleft()
        for dr, dc in offsets:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not seen[nr, nc] and int(cells[nr, nc]) in allowed:
                seen[nr, nc] = True
                out.add(CellIndex(nr, nc))
                queue.append((nr, nc))
    return out


def count_cells(grid: GridMap, state: CellState) -> int:
    return int(np.count_nonzero(grid.cells == int(state)))


def clone_region(grid: GridMap, center: tuple[int, int], half_width: int) -> GridMap:
    """Copy a square window of side 2*half_width centered on a cell.

    Rows [center.row - hw, center.row + hw) and the same for columns;
    parts of the window outside the source grid are padded with Unknown.
    The window origin is set so cells keep their world positions.
    """
    if half_width <= 0:
        raise EmptyRegion(f"half_width must be positive, got {half_width}")
    row0 = center[0] - half_width
    col0 = center[1] - half_width
    side = 2 * half_width
    out = np.full((side, side), int(CellState.UNKNOWN), dtype=np.uint8)
    src_r0 = max(row0, 0)
    src_r1 = min(row0 + side, grid.height)
    src_c0 = max(col0, 0)
    src_c1 = min(col0 + side, grid.width)
    if src_r0 < src_r1 and src_c0 < src_c1:
        out[src_r0 - row0 : src_r1 - row0, src_c0 - col0 : src_c1 - col0] = grid.cells[src_r0:src_r1, src_c0:src_c1]
    origin = WorldPoint(
        grid.origin.x + col0 * grid.resolution,
        grid.origin.y + row0 * grid.resolution,
    )
    return GridMap(out, grid.resolution, origin)


# ---------------------------------------------------------------------------
# PGM snapshots

_PGM_COMMENT = re.compile(r"resolution=([^ ]+) origin=([^,]+),(.+)")


def write_pgm(grid: GridMap, path: str | Path) -> None:
    """Write the grid as a binary PGM (P5) with geometry in a header comment."""
    header = (
        f"P5\n# resolution={grid.resolution!r} origin={grid.origin.x!r},{grid.origin.y!r}\n"
        f"{grid.width} {grid.height}\n255\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(grid.cells.tobytes())


def read_pgm(path: str | Path) -> GridMap:
    """Read a P5 grid snapshot written by write_pgm."""
    data = Path(path).read_bytes()
    # header: magic, comment with geometry, dims, maxval, then raw bytes
    lines = []
    pos = 0
    while len(lines) < 4:
        nl = data.index(b"\n", pos)
        lines.append(data[pos:nl].decode("ascii"))
        pos = nl + 1
    if lines[0].strip() != "P5":
        raise ValueError(f"{path}: not a binary PGM (magic {lines[0]!r})")
    m = _PGM_COMMENT.search(lines[1])
    if not m:
        raise ValueError(f"{path}: missing geometry comment in header")
    resolution = float(m.group(1))
    origin = WorldPoint(float(m.group(2)), float(m.group(3)))
    width, height = (int(t) for t in lines[2].split())
    if lines[3].strip() != "255":
        raise ValueError(f"{path}: expected maxval 255, got {lines[3]!r}")
    raw = data[pos : pos + width * height]
    if len(raw) != width * height:
        raise ValueError(f"{path}: truncated pixel data ({len(raw)} of {width * height} bytes)")
    cells = np.frombuffer(raw, dtype=np.uint8).reshape(height, width).copy()
    return GridMap(cells, resolution, origin)
