"""Scene descriptions: wall segment soup in, occupancy grids out.

A scene file is a JSON document with wall/door/window segments, a bounding
box and an interior seed point.  Building a scene runs parse -> endpoint
joining -> rasterization -> interior flood fill.  Door and window segments
are kept for provenance but never rasterized; openings in walls are simply
the absence of wall.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .grid import CellState, GridMap, WorldPoint, flood_fill, world_to_cell

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 0.2
DEFAULT_WALL_THICKNESS = 0.1
JOIN_TOLERANCE = 0.4


class SchemaError(ValueError):
    """A scene file failed validation."""


class SeedOnWall(ValueError):
    """The interior seed rasterized onto an Occupied cell."""


class ParamError(ValueError):
    """Generator or clutter parameters out of range."""


class SegmentKind(str, Enum):
    WALL = "wall"
    DOOR = "door"
    WINDOW = "window"


@dataclass(frozen=True)
class WallSegment:
    p1: WorldPoint
    p2: WorldPoint
    kind: SegmentKind = SegmentKind.WALL

    def __post_init__(self) -> None:
        if self.p1 == self.p2:
            raise ValueError(f"zero-length segment at {tuple(self.p1)}")

    @property
    def length(self) -> float:
        return math.hypot(self.p2.x - self.p1.x, self.p2.y - self.p1.y)


@dataclass
class ClutterParams:
    density: float = 0.02  # obstacles per m^2 of free space
    size_range: tuple[float, float] = (0.2, 1.0)
    clearance: float = 0.4
    max_retries: int = 100


@dataclass
class Scene:
    scene_id: str
    segments: list[WallSegment]
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    interior_seed: WorldPoint
    floorplan: GridMap
    cluttered: GridMap

    @property
    def free_area(self) -> float:
        """Free floor area of the plan in m^2."""
        n = int(np.count_nonzero(self.floorplan.cells == int(CellState.FREE)))
        return n * self.floorplan.resolution**2


# ---------------------------------------------------------------------------
# Parsing


def _point(obj, where: str) -> WorldPoint:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise SchemaError(f"{where}: expected [x, y], got {obj!r}")
    try:
        return WorldPoint(float(obj[0]), float(obj[1]))
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: non-numeric coordinate in {obj!r}") from None


def parse_scene_file(path: str | Path) -> Scene:
    """Load a scene JSON file and build its occupancy grids."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    for key in ("bounds", "interior_seed", "segments"):
        if key not in doc:
            raise SchemaError(f"{path}: missing required field '{key}'")
    bounds_raw = doc["bounds"]
    if not isinstance(bounds_raw, (list, tuple)) or len(bounds_raw) != 4:
        raise SchemaError(f"{path}: bounds must be [xmin, ymin, xmax, ymax]")
    try:
        bounds = tuple(float(v) for v in bounds_raw)
    except (TypeError, ValueError):
        raise SchemaError(f"{path}: non-numeric bounds {bounds_raw!r}") from None
    if not (bounds[0] < bounds[2] and bounds[1] < bounds[3]):
        raise SchemaError(f"{path}: bounds {bounds} have no area")
    seed = _point(doc["interior_seed"], f"{path}: interior_seed")
    if not isinstance(doc["segments"], list):
        raise SchemaError(f"{path}: segments must be a list")
    segments: list[WallSegment] = []
    for i, rec in enumerate(doc["segments"]):
        where = f"{path}: segments[{i}]"
        if not isinstance(rec, dict):
            raise SchemaError(f"{where}: expected object, got {rec!r}")
        kind_raw = rec.get("kind", "wall")
        try:
            kind = SegmentKind(kind_raw)
        except ValueError:
            raise SchemaError(f"{where}.kind: unknown kind {kind_raw!r}") from None
        if "p1" not in rec or "p2" not in rec:
            raise SchemaError(f"{where}: missing p1/p2")
        p1 = _point(rec["p1"], f"{where}.p1")
        p2 = _point(rec["p2"], f"{where}.p2")
        if p1 == p2:
            raise SchemaError(f"{where}: zero-length segment at {tuple(p1)}")
        segments.append(WallSegment(p1, p2, kind))
    for s in segments:
        for p in (s.p1, s.p2):
            if not (bounds[0] <= p.x <= bounds[2] and bounds[1] <= p.y <= bounds[3]):
                raise SchemaError(f"{path}: segment endpoint {tuple(p)} outside bounds {bounds}")
    if not (bounds[0] <= seed.x <= bounds[2] and bounds[1] <= seed.y <= bounds[3]):
        raise SchemaError(f"{path}: interior_seed {tuple(seed)} outside bounds {bounds}")

    scene_id = str(doc.get("id", path.stem))
    joined = join_endpoints(segments)
    plan = rasterize(joined, bounds, interior_seed=seed)
    return Scene(scene_id, joined, bounds, seed, plan, plan.copy())


def save_scene_file(scene: Scene, path: str | Path) -> None:
    doc = {
        "id": scene.scene_id,
        "bounds": list(scene.bounds),
        "interior_seed": [scene.interior_seed.x, scene.interior_seed.y],
        "segments": [
            {"kind": s.kind.value, "p1": [s.p1.x, s.p1.y], "p2": [s.p2.x, s.p2.y]}
            for s in scene.segments
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


# ---------------------------------------------------------------------------
# Endpoint joining


def join_endpoints(segments: Sequence[WallSegment], tol: float = JOIN_TOLERANCE) -> list[WallSegment]:
    """Bridge pairs of wall endpoints closer than tol with new wall segments.

    Scene files traced from drawings tend to leave hairline gaps where
    walls meet; those gaps would leak the interior flood fill.  Identical
    endpoints are already joined, and existing segments are never
    duplicated, so the operation is idempotent.
    """
    out = list(segments)
    existing = {frozenset((tuple(s.p1), tuple(s.p2))) for s in segments}
    endpoints: list[WorldPoint] = []
    for s in segments:
        if s.kind is SegmentKind.WALL:
            endpoints.extend((s.p1, s.p2))
    for i in range(len(endpoints)):
        for j in range(i + 1, len(endpoints)):
            a, b = endpoints[i], endpoints[j]
            d = math.hypot(a.x - b.x, a.y - b.y)
            if 0.0 < d < tol:
                key = frozenset((tuple(a), tuple(b)))
                if key not in existing:
                    existing.add(key)
                    out.append(WallSegment(a, b, SegmentKind.WALL))
    return out


# ---------------------------------------------------------------------------
# Rasterization


def _supercover_mark(occ: np.ndarray, u0: float, v0: float, u1: float, v1: float) -> None:
    """Mark every cell a segment passes through, in cell-unit coordinates.

    Classic incremental grid traversal, stepping both axes on exact corner
    crossings so the marked cells never leave a diagonal gap a ray could
    slip through.
    """
    h, w = occ.shape

    def mark(r: int, c: int) -> None:
        if 0 <= r < h and 0 <= c < w:
            occ[r, c] = True

    c, r = math.floor(u0), math.floor(v0)
    ce, re_ = math.floor(u1), math.floor(v1)
    du, dv = u1 - u0, v1 - v0
    sx = 1 if du > 0 else -1
    sy = 1 if dv > 0 else -1
    tdx = abs(1.0 / du) if du != 0 else math.inf
    tdy = abs(1.0 / dv) if dv != 0 else math.inf
    if du > 0:
        tmx = (c + 1 - u0) / du
    elif du < 0:
        tmx = (c - u0) / du
    else:
        tmx = math.inf
    if dv > 0:
        tmy = (r + 1 - v0) / dv
    elif dv < 0:
        tmy = (r - v0) / dv
    else:
        tmy = math.inf
    mark(r, c)
    limit = abs(ce - c) + abs(re_ - r) + 4
    for _ in range(limit):
        if c == ce and r == re_:
            return
        if abs(tmx - tmy) < 1e-12:
            # corner crossing: cover both axial neighbours before the diagonal
            mark(r, c + sx)
            mark(r + sy, c)
            c += sx
            r += sy
            tmx += tdx
            tmy += tdy
        elif tmx < tmy:
            c += sx
            tmx += tdx
        else:
            r += sy
            tmy += tdy
        mark(r, c)
    mark(re_, ce)


def _capsule_mark(
    occ: np.ndarray,
    origin: WorldPoint,
    res: float,
    seg: WallSegment,
    radius: float,
) -> None:
    """Mark cells whose center lies within `radius` of the segment."""
    h, w = occ.shape
    xmin = min(seg.p1.x, seg.p2.x) - radius - res
    xmax = max(seg.p1.x, seg.p2.x) + radius + res
    ymin = min(seg.p1.y, seg.p2.y) - radius - res
    ymax = max(seg.p1.y, seg.p2.y) + radius + res
    c0 = max(0, math.floor((xmin - origin.x) / res))
    c1 = min(w - 1, math.floor((xmax - origin.x) / res))
    r0 = max(0, math.floor((ymin - origin.y) / res))
    r1 = min(h - 1, math.floor((ymax - origin.y) / res))
    if c0 > c1 or r0 > r1:
        return
    cols = origin.x + (np.arange(c0, c1 + 1) + 0.5) * res
    rows = origin.y + (np.arange(r0, r1 + 1) + 0.5) * res
    gx, gy = np.meshgrid(cols, rows)
    px, py = seg.p1
    dx, dy = seg.p2.x - px, seg.p2.y - py
    L2 = dx * dx + dy * dy
    t = np.clip(((gx - px) * dx + (gy - py) * dy) / L2, 0.0, 1.0)
    dist = np.hypot(gx - (px + t * dx), gy - (py + t * dy))
    occ[r0 : r1 + 1, c0 : c1 + 1] |= dist <= radius


def rasterize(
    segments: Sequence[WallSegment],
    bounds: tuple[float, float, float, float],
    resolution: float = DEFAULT_RESOLUTION,
    wall_thickness: float = DEFAULT_WALL_THICKNESS,
    interior_seed: WorldPoint | None = None,
) -> GridMap:
    """Burn wall segments into a grid and flood-fill the interior Free.

    Cells touched by a wall become Occupied, the connected region around
    interior_seed becomes Free, everything else stays Unknown.
    """
    xmin, ymin, xmax, ymax = bounds
    width = int(math.ceil((xmax - xmin) / resolution - 1e-9))
    height = int(math.ceil((ymax - ymin) / resolution - 1e-9))
    if width < 1 or height < 1:
        raise ValueError(f"bounds {bounds} smaller than one cell")
    origin = WorldPoint(xmin, ymin)
    occ = np.zeros((height, width), dtype=bool)
    for seg in segments:
        if seg.kind is not SegmentKind.WALL:
            continue
        _supercover_mark(
            occ,
            (seg.p1.x - xmin) / resolution,
            (seg.p1.y - ymin) / resolution,
            (seg.p2.x - xmin) / resolution,
            (seg.p2.y - ymin) / resolution,
        )
        _capsule_mark(occ, origin, resolution, seg, wall_thickness / 2)
    cells = np.full((height, width), int(CellState.UNKNOWN), dtype=np.uint8)
    cells[occ] = int(CellState.OCCUPIED)
    grid = GridMap(cells, resolution, origin)
    if interior_seed is not None:
        seed_cell = world_to_cell(grid, interior_seed)
        if occ[seed_cell.row, seed_cell.col]:
            raise SeedOnWall(f"interior seed {tuple(interior_seed)} lies on a wall cell {tuple(seed_cell)}")
        interior = flood_fill(grid, seed_cell, {int(CellState.UNKNOWN)}, connectivity=4)
        rows = np.fromiter((c.row for c in interior), dtype=np.int64, count=len(interior))
        cols = np.fromiter((c.col for c in interior), dtype=np.int64, count=len(interior))
        grid.cells[rows, cols] = int(CellState.FREE)
    return grid


# ---------------------------------------------------------------------------
# Clutter


def inject_clutter(scene: Scene, params: ClutterParams, seed: int) -> GridMap:
    """Scatter furniture-like obstacles over the floor plan.

    Placement rejects anything that would disconnect the free space, cover
    the interior seed, or crowd existing obstacles closer than the
    clearance.  Repeated rejection skips the obstacle with a warning
    rather than failing the build.
    """
    if params.density < 0:
        raise ParamError(f"clutter density must be >= 0, got {params.density}")
    lo, hi = params.size_range
    if not (0 < lo <= hi):
        raise ParamError(f"bad clutter size range {params.size_range}")
    grid = scene.floorplan.copy()
    res = grid.resolution
    n_target = int(round(params.density * scene.free_area))
    if n_target == 0:
        return grid
    rng = np.random.default_rng(seed)
    seed_cell = world_to_cell(grid, scene.interior_seed)
    placed = 0
    free_val = int(CellState.FREE)
    clear_cells = None  # distance (cells) to nearest Occupied; rebuilt after each placement
    for _ in range(n_target):
        if clear_cells is None:
            clear_cells = ndimage.distance_transform_edt(grid.cells != int(CellState.OCCUPIED))
        done = False
        for _ in range(params.max_retries):
            free_rc = np.argwhere(grid.cells == free_val)
            center = free_rc[rng.integers(len(free_rc))]
            shape = "rect" if rng.random() < 0.5 else "disc"
            if shape == "rect":
                n_r = max(1, int(round(rng.uniform(lo, hi) / res)))
                n_c = max(1, int(round(rng.uniform(lo, hi) / res)))
                r0, c0 = center[0] - n_r // 2, center[1] - n_c // 2
                r1, c1 = r0 + n_r, c0 + n_c
                if r0 < 0 or c0 < 0 or r1 > grid.height or c1 > grid.width:
                    continue
                foot = np.zeros_like(grid.cells, dtype=bool)
                foot[r0:r1, c0:c1] = True
            else:
                rad = rng.uniform(lo, hi) / res / 2
                rr, cc = np.ogrid[: grid.height, : grid.width]
                foot = (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= rad**2
            foot_idx = np.nonzero(foot)
            if not np.all(grid.cells[foot_idx] == free_val):
                continue
            if foot[seed_cell.row, seed_cell.col]:
                continue
            if float(clear_cells[foot_idx].min()) * res < params.clearance:
                continue
            trial = grid.cells.copy()
            trial[foot_idx] = int(CellState.OCCUPIED)
            _, n_parts = ndimage.label(trial == free_val)
            if n_parts != 1:
                continue
            grid.cells[foot_idx] = int(CellState.OCCUPIED)
            clear_cells = None
            placed += 1
            done = True
            break
        if not done:
            break
    if placed < n_target:
        log.warning("placed %d of %d clutter obstacles for scene %s", placed, n_target, scene.scene_id)
    return grid


def with_clutter(scene: Scene, params: ClutterParams, seed: int) -> Scene:
    return replace(scene, cluttered=inject_clutter(scene, params, seed))


# ---------------------------------------------------------------------------
# Synthetic floor plans


def _snap(v: float, res: float = DEFAULT_RESOLUTION) -> float:
    return round(v / res) * res


def generate_synthetic_floorplan(
    seed: int,
    rooms_x: int,
    rooms_y: int,
    room_size_range: tuple[float, float],
    door_width: float = 0.9,
) -> Scene:
    """Build a rooms_x by rooms_y grid of rooms with doored shared walls.

    Every interior wall piece gets exactly one door, so the room adjacency
    graph is the full grid graph and the free space is connected.  Wall
    positions snap to the cell grid, which keeps rasterized walls one cell
    thick and door openings crisp.
    """
    if rooms_x < 1 or rooms_y < 1:
        raise ParamError(f"room counts must be >= 1, got {rooms_x}x{rooms_y}")
    lo, hi = room_size_range
    if lo > hi:
        raise ParamError(f"bad room size range {room_size_range}")
    if lo < 3 * DEFAULT_WALL_THICKNESS:
        raise ParamError(f"rooms of {lo} m are below 3x wall thickness")
    margin = 0.4  # keep doors away from room corners
    if lo < door_width + 2 * margin + 2 * DEFAULT_RESOLUTION:
        raise ParamError(
            f"rooms of {lo} m cannot fit a {door_width} m door with corner margins"
        )
    res = DEFAULT_RESOLUTION
    rng = np.random.default_rng(seed)
    widths = [_snap(rng.uniform(lo, hi)) for _ in range(rooms_x)]
    heights = [_snap(rng.uniform(lo, hi)) for _ in range(rooms_y)]
    xs = [0.0]
    for w in widths:
        xs.append(_snap(xs[-1] + w))
    ys = [0.0]
    for h in heights:
        ys.append(_snap(ys[-1] + h))
    W, H = xs[-1], ys[-1]

    door_cells = max(1, math.floor(door_width / res + 0.5))
    half_in = res / 2  # wall pieces end at the center of their last solid cell

    segments: list[WallSegment] = [
        WallSegment(WorldPoint(0.0, 0.0), WorldPoint(W, 0.0)),
        WallSegment(WorldPoint(W, 0.0), WorldPoint(W, H)),
        WallSegment(WorldPoint(W, H), WorldPoint(0.0, H)),
        WallSegment(WorldPoint(0.0, H), WorldPoint(0.0, 0.0)),
    ]

    def pierced(fixed: float, a0: float, a1: float, vertical: bool) -> None:
        """Add a wall from a0 to a1 at `fixed`, with one door opening."""
        span_lo = a0 + margin + door_width / 2
        span_hi = a1 - margin - door_width / 2
        d = _snap(rng.uniform(span_lo, span_hi))
        gap_lo = _snap(d - door_cells * res / 2)
        gap_hi = _snap(gap_lo + door_cells * res)
        pieces = [(a0, gap_lo - half_in), (gap_hi + half_in, a1)]
        for b0, b1 in pieces:
            if b1 - b0 < res / 4:
                continue
            if vertical:
                segments.append(WallSegment(WorldPoint(fixed, b0), WorldPoint(fixed, b1)))
            else:
                segments.append(WallSegment(WorldPoint(b0, fixed), WorldPoint(b1, fixed)))
        if vertical:
            segments.append(
                WallSegment(WorldPoint(fixed, gap_lo), WorldPoint(fixed, gap_hi), SegmentKind.DOOR)
            )
        else:
            segments.append(
                WallSegment(WorldPoint(gap_lo, fixed), WorldPoint(gap_hi, fixed), SegmentKind.DOOR)
            )

    for i in range(1, rooms_x):
        for j in range(rooms_y):
            pierced(xs[i], ys[j], ys[j + 1], vertical=True)
    for j in range(1, rooms_y):
        for i in range(rooms_x):
            pierced(ys[j], xs[i], xs[i + 1], vertical=False)

    pad = 2 * res  # unknown ring outside the outer walls
    bounds = (-pad, -pad, W + pad, H + pad)
    seed_pt = WorldPoint(_snap(widths[0] / 2) + res / 2, _snap(heights[0] / 2) + res / 2)
    joined = join_endpoints(segments)
    plan = rasterize(joined, bounds, interior_seed=seed_pt)
    scene_id = f"synth-{rooms_x}x{rooms_y}-s{seed}"
    return Scene(scene_id, joined, bounds, seed_pt, plan, plan.copy())
