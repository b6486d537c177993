"""Room topology extraction from tri-state maps.

The pipeline is: exact Euclidean distance transform (cell units, walls and
the map border both count as obstacles) -> Gaussian smoothing -> Hessian of
the smoothed field via central differences -> saddle points (door
candidates, det H strongly negative) and local maxima (room seeds, det H
positive with concave rows) -> segmentation: saddle neighborhoods become
door cells that sever the free space, maxima seed room fills, large
leftover components are swept into rooms, and doors that touch two rooms
make them adjacent.

Distances are kept in cell units so the curvature thresholds are
independent of map resolution. Smoothing reflects the field at the map
border.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import ndimage

from .grid import CellIndex, CellState, GridMap


class TooSmall(Exception):
    """Map is smaller than the smoothing kernel support."""


class EmptyGraph(Exception):
    """No room seeds and no free space; there is nothing to segment."""


class NoRooms(Exception):
    """Queried a graph that contains zero rooms."""


class BadRoomId(Exception):
    """Room id outside 1..rooms."""


_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = np.ones((3, 3), dtype=bool)

# Smoothing width that keeps door-scale constrictions visible at 0.2 m
# cells. A door is a 3-5 cell gap; at sigma=1 the smoothed det H at its
# saddle lands near -0.25 and never crosses the -0.4 threshold, while
# sigma=0.5 measures -0.4..-0.8 across 0.5-0.9 m doors and still kills
# single-cell noise. Pass this to detect_critical_points when the field
# comes from an indoor-resolution map.
DOOR_SIGMA = 0.5


@dataclass
class DistanceField:
    """Per-cell Euclidean distance (cell units) to the nearest Occupied or
    out-of-bounds cell. Zero exactly on non-Free cells."""

    values: np.ndarray


@dataclass
class CriticalPoints:
    saddles: list[CellIndex]  # constriction points, door candidates
    maxima: list[CellIndex]  # interior peaks, room seeds


@dataclass
class RoomGraph:
    """Segmentation and adjacency of rooms.

    seg: 0 = unassigned/obstacle/unknown, -k = door k, +k = room k.
    adjacency: boolean (rooms, rooms); [i, j] is True when rooms i+1 and
    j+1 share a door. Symmetric, zero diagonal.
    door_rooms: for each door (index k-1 for door id -k) the sorted tuple
    of room ids its cells touch 8-adjacently.
    free: Free mask of the source map, kept so nearest-room queries can
    walk the same space the graph was built from.
    """

    seg: np.ndarray
    adjacency: np.ndarray
    rooms: int
    doors: int
    door_rooms: tuple[tuple[int, ...], ...]
    free: np.ndarray
    resolution: float


def distance_transform(grid: GridMap) -> DistanceField:
    """Exact Euclidean distance to the nearest obstacle, in cell units.

    Unknown counts as an obstacle, and so does the ring of cells just
    outside the map.
    """
    free = np.zeros((grid.height + 2, grid.width + 2), dtype=bool)
    free[1:-1, 1:-1] = grid.cells == CellState.FREE
    values = ndimage.distance_transform_edt(free)[1:-1, 1:-1]
    return DistanceField(np.ascontiguousarray(values))


def hessian(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second central differences (unit-cell step) along rows (u), columns
    (v) and the mixed term. Border cells, where the stencil does not fit,
    are left at zero; callers must mask them out."""
    duu = np.zeros_like(values)
    dvv = np.zeros_like(values)
    duv = np.zeros_like(values)
    duu[1:-1, :] = values[2:, :] - 2.0 * values[1:-1, :] + values[:-2, :]
    dvv[:, 1:-1] = values[:, 2:] - 2.0 * values[:, 1:-1] + values[:, :-2]
    duv[1:-1, 1:-1] = (
        values[2:, 2:] - values[2:, :-2] - values[:-2, 2:] + values[:-2, :-2]
    ) / 4.0
    return duu, dvv, duv


def _reduce_clusters(mask: np.ndarray, score: np.ndarray, sign: float) -> list[CellIndex]:
    """Collapse each 8-connected candidate cluster to its cell of extremal
    sign*score; ties go to the first cell in row-major order."""
    labels, count = ndimage.label(mask, structure=_EIGHT)
    points: list[CellIndex] = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        sub = labels[sl] == k
        scored = np.where(sub, sign * score[sl], -np.inf)
        flat = int(np.argmax(scored))
        points.append(
            CellIndex(sl[0].start + flat // scored.shape[1], sl[1].start + flat % scored.shape[1])
        )
    points.sort()
    return points


def detect_critical_points(
    dist: DistanceField,
    sigma: float = 1.0,
    h_saddle: float = -0.4,
    h_max_duu: float = -0.4,
    d_min: float = 1.5,
) -> CriticalPoints:
    """Find constriction (saddle) and peak (maximum) cells of the distance
    field.

    The field is smoothed with a Gaussian (sigma in cells, truncated at 3
    sigma), then det H = Duu*Dvv - Duv^2 from central differences. A cell
    is a saddle candidate when det H < h_saddle and a maximum candidate
    when det H > 0 and Duu < h_max_duu. Candidates closer than d_min cells
    to an obstacle are dropped; each surviving 8-connected cluster reduces
    to one point (saddles: most negative det H, maxima: largest distance).
    """
    values = dist.values
    radius = int(3.0 * sigma + 0.5)
    support = 2 * radius + 1
    if values.shape[0] < support or values.shape[1] < support:
        raise TooSmall(f"field {values.shape} is smaller than the {support}x{support} kernel support")
    smoothed = ndimage.gaussian_filter(values, sigma=sigma, truncate=3.0)
    duu, dvv, duv = hessian(smoothed)
    det = duu * dvv - duv * duv
    interior = np.zeros(values.shape, dtype=bool)
    interior[1:-1, 1:-1] = True
    deep = values >= d_min
    saddles = _reduce_clusters(interior & deep & (det < h_saddle), det, -1.0)
    maxima = _reduce_clusters(interior & deep & (det > 0.0) & (duu < h_max_duu), values, 1.0)
    return CriticalPoints(saddles, maxima)


def build_room_graph(grid: GridMap, cp: CriticalPoints, door_radius: float = 0.6) -> RoomGraph:
    """Segment the map into door cells and rooms and derive adjacency.

    Free cells within an L1 ball of radius door_radius (meters) around each
    saddle become door cells; 8-connected door components get ids -1, -2,
    ... Door cells act as walls while rooms are filled: each maximum seeds
    a 4-connected fill of the free non-door space, then any unseeded free
    component of at least 25 cells also becomes a room, so big rooms whose
    flat distance field hides the peak still get labeled. Two rooms are
    adjacent when one door component touches both 8-adjacently.
    """
    free = grid.cells == np.uint8(CellState.FREE)
    if not cp.maxima and not free.any():
        raise EmptyGraph("no room seeds and no free cells")
    h, w = free.shape
    seg = np.zeros((h, w), dtype=np.int32)

    door_mask = np.zeros((h, w), dtype=bool)
    max_l1 = int(math.floor(door_radius / grid.resolution - 1e-9))
    for p in cp.saddles:
        for dr in range(-max_l1, max_l1 + 1):
            reach = max_l1 - abs(dr)
            r = p.row + dr
            if not 0 <= r < h:
                continue
            c_lo = max(0, p.col - reach)
            c_hi = min(w - 1, p.col + reach)
            if c_lo <= c_hi:
                door_mask[r, c_lo : c_hi + 1] |= free[r, c_lo : c_hi + 1]

    door_labels, doors = ndimage.label(door_mask, structure=_EIGHT)
    seg[door_mask] = -door_labels[door_mask]

    # Filling every maximum's component in order is equivalent to flood
    # filling one maximum at a time and skipping already-labeled seeds.
    comp, ncomp = ndimage.label(free & ~door_mask, structure=_FOUR)
    room_of_comp: dict[int, int] = {}
    next_room = 1
    for p in cp.maxima:
        k = int(comp[p.row, p.col])
        if k == 0 or k in room_of_comp:
            continue
        room_of_comp[k] = next_room
        next_room += 1
    counts = np.bincount(comp.ravel(), minlength=ncomp + 1)
    for k in range(1, ncomp + 1):
        if k not in room_of_comp and counts[k] >= 25:
            room_of_comp[k] = next_room
            next_room += 1
    rooms = next_room - 1

    lut = np.zeros(ncomp + 1, dtype=np.int32)
    for k, rid in room_of_comp.items():
        lut[k] = rid
    seg = np.where(door_mask, seg, lut[comp])

    adjacency = np.zeros((rooms, rooms), dtype=bool)
    door_rooms: list[tuple[int, ...]] = []
    for d, sl in enumerate(ndimage.find_objects(door_labels), start=1):
        grown = (
            slice(max(0, sl[0].start - 1), min(h, sl[0].stop + 1)),
            slice(max(0, sl[1].start - 1), min(w, sl[1].stop + 1)),
        )
        touching_door = ndimage.binary_dilation(door_labels[grown] == d, structure=_EIGHT)
        touched = np.unique(seg[grown][touching_door])
        ids = tuple(int(t) for t in touched if t > 0)
        door_rooms.append(ids)
        for a, b in combinations(ids, 2):
            adjacency[a - 1, b - 1] = True
            adjacency[b - 1, a - 1] = True

    return RoomGraph(
        seg=seg,
        adjacency=adjacency,
        rooms=rooms,
        doors=int(doors),
        door_rooms=tuple(door_rooms),
        free=free,
        resolution=grid.resolution,
    )


def room_of(graph: RoomGraph, cell: CellIndex) -> int:
    """Room id containing the cell, or of the nearest labeled cell.

    Nearest is by breadth-first search over Free cells (4-adjacent), ties
    going to the smaller room id; cells the search cannot reach fall back
    to straight-line distance.
    """
    if graph.rooms == 0:
        raise NoRooms("graph has no rooms")
    seg = graph.seg
    h, w = seg.shape
    r0, c0 = int(cell[0]), int(cell[1])
    in_bounds = 0 <= r0 < h and 0 <= c0 < w
    if in_bounds and seg[r0, c0] > 0:
        return int(seg[r0, c0])

    if in_bounds:
        seen = np.zeros((h, w), dtype=bool)
        seen[r0, c0] = True
        level = deque([(r0, c0)])
        while level:
            hits = [int(seg[r, c]) for r, c in level if seg[r, c] > 0]
            if hits:
                return min(hits)
            nxt: deque[tuple[int, int]] = deque()
            for r, c in level:
                for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                    if 0 <= nr < h and 0 <= nc < w and graph.free[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        nxt.append((nr, nc))
            level = nxt

    rows, cols = np.nonzero(seg > 0)
    d2 = (rows - r0) ** 2 + (cols - c0) ** 2
    order = np.lexsort((seg[rows, cols], d2))
    best = order[0]
    return int(seg[rows[best], cols[best]])


def topo_distance(graph: RoomGraph, a: int, b: int) -> float:
    """Hop count between rooms over the adjacency matrix; math.inf when
    they are in different connected components."""
    for x in (a, b):
        if not isinstance(x, (int, np.integer)) or isinstance(x, bool) or not 1 <= x <= graph.rooms:
            raise BadRoomId(f"room id {x!r} outside 1..{graph.rooms}")
    if a == b:
        return 0.0
    hops = np.full(graph.rooms, -1, dtype=np.int64)
    hops[a - 1] = 0
    level = deque([a - 1])
    while level:
        nxt: deque[int] = deque()
        for u in level:
            for v in np.nonzero(graph.adjacency[u])[0]:
                if hops[v] < 0:
                    hops[v] = hops[u] + 1
                    if v == b - 1:
                        return float(hops[v])
                    nxt.append(int(v))
        level = nxt
    return math.inf


def room_graph_to_dot(graph: RoomGraph) -> str:
    """DOT text: rooms as nodes labeled with their floor area, doors as
    edges between the rooms they touch."""
    cell_area = graph.resolution * graph.resolution
    counts = np.bincount(graph.seg[graph.seg > 0], minlength=graph.rooms + 1)
    lines = ["graph rooms {"]
    for rid in range(1, graph.rooms + 1):
        area = counts[rid] * cell_area
        lines.append(f'  r{rid} [label="R{rid} area={area:.2f}"];')
    for k, ids in enumerate(graph.door_rooms, start=1):
        for a, b in combinations(ids, 2):
            lines.append(f'  r{a} -- r{b} [label="D{k}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def seg_to_rle(seg: np.ndarray) -> dict:
    """Row-major run-length encoding of a label map, JSON-friendly."""
    flat = seg.ravel()
    change = np.nonzero(np.diff(flat))[0] + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    return {
        "height": int(seg.shape[0]),
        "width": int(seg.shape[1]),
        "runs": [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)],
    }


def rle_to_seg(payload: dict) -> np.ndarray:
    values = np.array([v for v, _ in payload["runs"]], dtype=np.int32)
    lengths = np.array([n for _, n in payload["runs"]], dtype=np.int64)
    flat = np.repeat(values, lengths)
    return flat.reshape(payload["height"], payload["width"])
