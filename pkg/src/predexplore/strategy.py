"""Goal selection and the closed exploration / navigation loops.

Four exploration strategies share one simulation loop and differ only in
how they pick the next frontier:

* ``nbv``        - score k * observable_unknown_area - travel_cost
* ``tsp``        - visit the frontier that starts the cheapest open tour
* ``predictive`` - score k * predicted_gain * exp(-lam * room_hops) - cost,
  where gain and hops come from a map augmented with per-frontier
  predictions
* ``nopredict``  - the predictive scorer run on the raw observed map, so
  the gain term is structurally zero and it degrades to nearest-frontier

Navigation to a known target offers two policies: ``predicted`` estimates
the cost beyond the horizon on the prediction-augmented map, ``greedy``
estimates it on the observed map with Unknown treated as passable.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .frontier import FrontierCluster, detect_frontiers, extract_window
from .grid import CellIndex, CellState, GridMap, OutOfBounds, WorldPoint, cell_to_world, flood_fill, world_to_cell
from .planning import CostField, cost_field, traversable_optimistic
from .prediction import PredictedMap, Predictor, Provenance, merge_local_predictions, predict
from .scene import Scene
from .sensor import InvalidPose, LidarConfig, RobotState, new_observed, sense
from .topology import (
    DOOR_SIGMA,
    EmptyGraph,
    NoRooms,
    RoomGraph,
    TooSmall,
    build_room_graph,
    detect_critical_points,
    distance_transform,
    room_of,
    topo_distance,
)

STRATEGIES = ("nbv", "tsp", "predictive", "nopredict")
NAV_POLICIES = ("predicted", "greedy")

_SQRT2 = math.sqrt(2.0)


class NoReachableFrontier(Exception):
    """Frontiers exist but none can be reached over observed Free cells."""


class DisconnectedTarget(Exception):
    """Navigation target is not connected to the start on the true map."""


@dataclass
class ExploreConfig:
    """Knobs shared by every strategy.

    k scales information gain into the cost unit (meters per m^2), lam
    damps gain by room distance, gain_radius is the disc (meters) that
    counts toward a frontier's gain, sense_every is the scan cadence in
    cells moved, and step_cap bounds total cells moved per run.
    """

    k: float = 0.05
    lam: float = 1.0
    gain_radius: float = 1.0
    sense_every: int = 1
    step_cap: int = 200_000

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.lam < 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if self.gain_radius <= 0:
            raise ValueError(f"gain_radius must be positive, got {self.gain_radius}")
        if self.sense_every < 1:
            raise ValueError(f"sense_every must be >= 1, got {self.sense_every}")
        if self.step_cap < 1:
            raise ValueError(f"step_cap must be >= 1, got {self.step_cap}")


@dataclass
class DecisionRecord:
    """One goal choice: the scored terms of the winner at decision time."""

    step: int
    chosen: CellIndex
    gain: float | None  # I, m^2
    hops: float | None  # d, rooms
    cost: float | None  # C, meters
    utility: float | None  # U
    traveled_m: float
    coverage_pct: float


@dataclass
class StepRecord:
    step: int
    pose: WorldPoint
    traveled_m: float
    coverage_pct: float


@dataclass
class RunLog:
    run_id: str
    strategy: str
    decisions: list[DecisionRecord] = dataclass_field(default_factory=list)
    steps: list[StepRecord] = dataclass_field(default_factory=list)
    traveled_m: float = 0.0
    coverage_pct: float = 0.0
    incomplete: bool = False
    final_map: GridMap | None = None
    reached_target: bool | None = None  # navigation runs only


# ---------------------------------------------------------------------------
# utilities


def utility_predictive(k: float, gain: float, hops: float, cost: float, lam: float = 1.0) -> float:
    """U = k * gain * exp(-lam * hops) - cost.

    An infinite hop count (rooms in different graph components) zeroes
    the gain term rather than propagating nan.
    """
    term = 0.0 if math.isinf(hops) else k * gain * math.exp(-lam * hops)
    return term - cost


def utility_nbv(k: float, gain: float, cost: float) -> float:
    """U = k * gain - cost, gain being directly observable Unknown area."""
    return k * gain - cost


_DISC_CACHE: dict[int, np.ndarray] = {}


def _disc_offsets(radius_cells: float) -> np.ndarray:
    """Integer (dr, dc) offsets within Euclidean radius, center included."""
    r = int(math.floor(radius_cells + 1e-9))
    key = r
    cached = _DISC_CACHE.get(key)
    if cached is not None:
        return cached
    span = np.arange(-r, r + 1)
    dr, dc = np.meshgrid(span, span, indexing="ij")
    keep = dr * dr + dc * dc <= radius_cells * radius_cells + 1e-9
    offsets = np.stack([dr[keep], dc[keep]], axis=1)
    _DISC_CACHE[key] = offsets
    return offsets


def _disc_cells(grid: GridMap, center: CellIndex, radius_m: float) -> tuple[np.ndarray, np.ndarray]:
    """In-bounds (rows, cols) of the disc around a cell."""
    offsets = _disc_offsets(radius_m / grid.resolution)
    rows = offsets[:, 0] + int(center[0])
    cols = offsets[:, 1] + int(center[1])
    keep = (rows >= 0) & (rows < grid.height) & (cols >= 0) & (cols < grid.width)
    return rows[keep], cols[keep]


def info_gain_predicted(
    predicted: PredictedMap,
    observed: GridMap,
    cluster: FrontierCluster,
    radius_m: float,
) -> float:
    """Area (m^2) near the representative that is Unknown in the observed
    map but Free in the predicted one: space a prediction says is worth
    going to see."""
    rows, cols = _disc_cells(observed, cluster.representative, radius_m)
    hit = (observed.cells[rows, cols] == int(CellState.UNKNOWN)) & (
        predicted.map.cells[rows, cols] == int(CellState.FREE)
    )
    return float(np.count_nonzero(hit)) * observed.resolution**2


def info_gain_observed(observed: GridMap, cluster: FrontierCluster, radius_m: float) -> float:
    """Unknown area (m^2) near the representative, no prediction involved."""
    rows, cols = _disc_cells(observed, cluster.representative, radius_m)
    hit = observed.cells[rows, cols] == int(CellState.UNKNOWN)
    return float(np.count_nonzero(hit)) * observed.resolution**2


# ---------------------------------------------------------------------------
# open-tour planning


def plan_open_tour(cost: np.ndarray) -> tuple[list[int], float]:
    """Order nodes 1..n-1 into a cheapest open tour starting at node 0.

    Exhaustive for up to 8 cities, nearest-neighbour plus first-improvement
    2-opt beyond that. Returns (city order without the start, total cost).
    """
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0] - 1
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    if n <= 0:
        return [], 0.0

    def tour_cost(order: list[int]) -> float:
        total = 0.0
        prev = 0
        for city in order:
            total += float(cost[prev, city])
            prev = city
        return total

    if n <= 8:
        best_order: list[int] | None = None
        best_cost = math.inf
        for perm in itertools.permutations(range(1, n + 1)):
            c = tour_cost(list(perm))
            if c < best_cost:
                best_cost = c
                best_order = list(perm)
        assert best_order is not None
        return best_order, best_cost

    # Nearest neighbour, index as tie-break.
    remaining = list(range(1, n + 1))
    order = []
    prev = 0
    while remaining:
        nxt = min(remaining, key=lambda j: (float(cost[prev, j]), j))
        order.append(nxt)
        remaining.remove(nxt)
        prev = nxt

    # 2-opt on the open tour: reversing order[i:j+1] rewires the edge into
    # the segment and, unless the segment ends the tour, the edge out.
    full = [0] + order
    improved = True
    while improved:
        improved = False
        m = len(full)
        for i in range(1, m - 1):
            for j in range(i + 1, m):
                before = float(cost[full[i - 1], full[i]])
                after = float(cost[full[i - 1], full[j]])
                if j + 1 < m:
                    before += float(cost[full[j], full[j + 1]])
                    after += float(cost[full[i], full[j + 1]])
                if after < before - 1e-12:
                    full[i : j + 1] = reversed(full[i : j + 1])
                    improved = True
    return full[1:], tour_cost(full[1:])


def goal_tsp(frontiers: list[FrontierCluster], robot: RobotState, observed: GridMap) -> FrontierCluster:
    """First stop of the cheapest open tour over all reachable frontiers."""
    if not frontiers:
        raise NoReachableFrontier("no frontiers to tour")
    start = world_to_cell(observed, robot.pose)
    from_robot = cost_field(observed, start)
    reachable = [f for f in frontiers if math.isfinite(from_robot.cost_to(f.representative))]
    if not reachable:
        raise NoReachableFrontier(f"all {len(frontiers)} frontiers unreachable from {start}")
    m = len(reachable)
    matrix = np.zeros((m + 1, m + 1), dtype=np.float64)
    for j, f in enumerate(reachable):
        matrix[0, j + 1] = matrix[j + 1, 0] = from_robot.cost_to(f.representative)
    # Frontiers reachable from the robot share its Free component, so the
    # pairwise legs are always finite.
    for i, f in enumerate(reachable[:-1]):
        from_f = cost_field(observed, f.representative)
        for j in range(i + 1, m):
            matrix[i + 1, j + 1] = matrix[j + 1, i + 1] = from_f.cost_to(reachable[j].representative)
    order, _ = plan_open_tour(matrix)
    return reachable[order[0] - 1]


# ---------------------------------------------------------------------------
# shared loop plumbing


def _observed_as_predicted(observed: GridMap) -> PredictedMap:
    """Wrap the observed map as a prediction that adds nothing."""
    prov = np.where(
        observed.cells == int(CellState.UNKNOWN),
        int(Provenance.UNKNOWN),
        int(Provenance.OBSERVED),
    ).astype(np.uint8)
    clone = GridMap(observed.cells.copy(), observed.resolution, observed.origin)
    return PredictedMap(map=clone, provenance=prov)


def _reach_mask(truth: GridMap, start: CellIndex) -> np.ndarray:
    """Truth-Free cells reachable from the start; the coverage denominator."""
    component = flood_fill(truth, start, (int(CellState.FREE),), connectivity=4)
    mask = np.zeros((truth.height, truth.width), dtype=bool)
    for cell in component:
        mask[cell.row, cell.col] = True
    return mask


def _coverage_pct(observed: GridMap, reach: np.ndarray, denom: int) -> float:
    if denom == 0:
        return 0.0
    seen = np.count_nonzero((observed.cells == int(CellState.FREE)) & reach)
    return 100.0 * float(seen) / float(denom)


def _is_frontier_cell(observed: GridMap, cell: CellIndex) -> bool:
    r, c = int(cell[0]), int(cell[1])
    if observed.cells[r, c] != int(CellState.FREE):
        return False
    for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
        if 0 <= nr < observed.height and 0 <= nc < observed.width:
            if observed.cells[nr, nc] == int(CellState.UNKNOWN):
                return True
    return False


def _room_graph_of(grid: GridMap) -> RoomGraph | None:
    """Segment a possibly half-observed map, None when too bare to try."""
    try:
        dist = distance_transform(grid)
        points = detect_critical_points(dist, sigma=DOOR_SIGMA)
        return build_room_graph(grid, points)
    except (TooSmall, EmptyGraph, NoRooms):
        return None


def _room_hops(graph: RoomGraph | None, a: CellIndex, b: CellIndex) -> float:
    """Room-graph distance between the rooms holding two cells; 0 when no
    graph is available so the gain term stays undamped."""
    if graph is None:
        return 0.0
    try:
        return topo_distance(graph, room_of(graph, a), room_of(graph, b))
    except NoRooms:
        return 0.0


def _start_pose(scene: Scene, start: WorldPoint | None, seed: int) -> WorldPoint:
    truth = scene.cluttered
    if start is not None:
        try:
            cell = world_to_cell(truth, start)
        except OutOfBounds as exc:
            raise InvalidPose(str(exc)) from exc
        if truth.cells[cell.row, cell.col] != int(CellState.FREE):
            raise InvalidPose(f"start {start} is not on a Free cell")
        return start
    free = np.argwhere(truth.cells == int(CellState.FREE))
    if len(free) == 0:
        raise InvalidPose("scene has no Free cells to start from")
    rng = np.random.default_rng(seed)
    row, col = free[int(rng.integers(len(free)))]
    return cell_to_world(truth, (int(row), int(col)))


@dataclass
class _Scored:
    index: int
    gain: float | None
    hops: float | None
    cost: float
    utility: float | None


def _score_predictive(
    observed: GridMap,
    clusters: list[FrontierCluster],
    costs: list[float],
    predicted: PredictedMap,
    robot_cell: CellIndex,
    cfg: ExploreConfig,
) -> _Scored:
    graph = _room_graph_of(predicted.map)
    best: _Scored | None = None
    for i, f in enumerate(clusters):
        if not math.isfinite(costs[i]):
            continue  # unreachable frontier: skipped, not fatal
        gain = info_gain_predicted(predicted, observed, f, cfg.gain_radius)
        hops = _room_hops(graph, f.representative, robot_cell)
        u = utility_predictive(cfg.k, gain, hops, costs[i], cfg.lam)
        if best is None or u > best.utility:
            best = _Scored(i, gain, hops, costs[i], u)
    if best is None:
        raise NoReachableFrontier(f"all {len(clusters)} frontiers unreachable")
    return best


def _score_nbv(
    observed: GridMap,
    clusters: list[FrontierCluster],
    costs: list[float],
    cfg: ExploreConfig,
) -> _Scored:
    best: _Scored | None = None
    for i, f in enumerate(clusters):
        if not math.isfinite(costs[i]):
            continue
        gain = info_gain_observed(observed, f, cfg.gain_radius)
        u = utility_nbv(cfg.k, gain, costs[i])
        if best is None or u > best.utility:
            best = _Scored(i, gain, None, costs[i], u)
    if best is None:
        raise NoReachableFrontier(f"all {len(clusters)} frontiers unreachable")
    return best


# ---------------------------------------------------------------------------
# exploration loop


def run_exploration(
    scene: Scene,
    strategy: str,
    endpoint: Predictor,
    cfg: ExploreConfig | None = None,
    seed: int = 0,
    start: WorldPoint | None = None,
    lidar: LidarConfig | None = None,
    on_decision: Callable[[GridMap, FrontierCluster, int], None] | None = None,
) -> RunLog:
    """Explore a scene until no frontiers remain or the step cap trips.

    The loop senses, clusters frontiers, lets the strategy pick one, then
    walks the observed-Free shortest path toward it, scanning every
    sense_every cells. Arrival or the goal losing its frontier status
    triggers a replan. Coverage is measured against the truth-Free cells
    actually reachable from the start.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    cfg = cfg if cfg is not None else ExploreConfig()
    lidar = lidar if lidar is not None else LidarConfig()
    truth = scene.cluttered
    pose = _start_pose(scene, start, seed)
    robot = RobotState(pose=pose)
    start_cell = world_to_cell(truth, pose)
    reach = _reach_mask(truth, start_cell)
    denom = int(reach.sum())
    observed = new_observed(truth)

    log = RunLog(run_id=f"{scene.scene_id}-{strategy}-s{seed}", strategy=strategy)
    sense(truth, observed, robot, lidar)
    cov = _coverage_pct(observed, reach, denom)
    log.steps.append(StepRecord(0, robot.pose, robot.traveled, cov))

    steps_moved = 0
    while True:
        clusters = detect_frontiers(observed)
        if not clusters:
            break
        if steps_moved >= cfg.step_cap:
            log.incomplete = True
            break
        robot_cell = world_to_cell(observed, robot.pose)
        field = cost_field(observed, robot_cell)
        costs = [field.cost_to(f.representative) for f in clusters]

        if strategy == "tsp":
            chosen_cluster = goal_tsp(clusters, robot, observed)
            idx = clusters.index(chosen_cluster)
            scored = _Scored(idx, None, None, costs[idx], None)
        elif strategy == "nbv":
            scored = _score_nbv(observed, clusters, costs, cfg)
        else:
            if strategy == "predictive":
                windows = [extract_window(observed, f, lidar.max_range) for f in clusters]
                locals_ = [predict(endpoint, w) for w in windows]
                predicted = merge_local_predictions(observed, clusters, locals_)
            else:  # nopredict: same scorer, no augmentation, gain is 0
                predicted = _observed_as_predicted(observed)
            scored = _score_predictive(observed, clusters, costs, predicted, robot_cell, cfg)

        if on_decision is not None:
            # dataset emission taps the loop here, before any walking
            on_decision(observed, clusters[scored.index], steps_moved)
        goal = clusters[scored.index].representative
        log.decisions.append(
            DecisionRecord(
                step=steps_moved,
                chosen=goal,
                gain=scored.gain,
                hops=scored.hops,
                cost=scored.cost,
                utility=scored.utility,
                traveled_m=robot.traveled,
                coverage_pct=cov,
            )
        )

        path = field.path_to(goal)
        replan = False
        for k in range(1, len(path)):
            here, nxt = path[k - 1], path[k]
            diagonal = here.row != nxt.row and here.col != nxt.col
            robot.pose = cell_to_world(observed, nxt)
            robot.traveled += truth.resolution * (_SQRT2 if diagonal else 1.0)
            steps_moved += 1
            at_goal = nxt == goal
            informative = False
            if steps_moved % cfg.sense_every == 0 or at_goal:
                informative = sense(truth, observed, robot, lidar) > 0
                if informative:
                    cov = _coverage_pct(observed, reach, denom)
            log.steps.append(StepRecord(steps_moved, robot.pose, robot.traveled, cov))
            if steps_moved >= cfg.step_cap:
                log.incomplete = True
                replan = True
                break
            if at_goal:
                replan = True
                break
            if informative and not _is_frontier_cell(observed, goal):
                replan = True  # goal already seen through: pick afresh
                break
        if log.incomplete:
            break
        if not replan and len(path) == 1:
            # Already standing on the goal; the arrival sense above never
            # ran, so scan here or the loop would spin.
            if sense(truth, observed, robot, lidar) > 0:
                cov = _coverage_pct(observed, reach, denom)

    log.traveled_m = robot.traveled
    log.coverage_pct = _coverage_pct(observed, reach, denom)
    log.final_map = observed
    return log


# ---------------------------------------------------------------------------
# navigation loop


def run_navigation(
    scene: Scene,
    policy: str,
    endpoint: Predictor,
    start: WorldPoint,
    target: WorldPoint,
    cfg: ExploreConfig | None = None,
    seed: int = 0,
    lidar: LidarConfig | None = None,
) -> RunLog:
    """Drive to a known world-frame target through unknown space.

    While the target is unreachable over observed Free cells the robot
    commits to the frontier minimizing nav_cost(robot, f) plus an estimate
    of the remaining cost from f to the target, re-evaluating after every
    scan that changes at least one cell. The estimate runs over Unknown
    cells of the prediction-augmented map (policy "predicted") or of the
    observed map itself (policy "greedy"). Once the target is reachable
    the robot goes straight to it.
    """
    if policy not in NAV_POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {NAV_POLICIES}")
    cfg = cfg if cfg is not None else ExploreConfig()
    lidar = lidar if lidar is not None else LidarConfig()
    truth = scene.cluttered

    try:
        start_cell = world_to_cell(truth, start)
        target_cell = world_to_cell(truth, target)
    except OutOfBounds as exc:
        raise InvalidPose(str(exc)) from exc
    if truth.cells[start_cell.row, start_cell.col] != int(CellState.FREE):
        raise InvalidPose(f"start {start} is not on a Free cell")
    if truth.cells[target_cell.row, target_cell.col] != int(CellState.FREE):
        raise InvalidPose(f"target {target} is not on a Free cell")
    reach = _reach_mask(truth, start_cell)
    if not reach[target_cell.row, target_cell.col]:
        raise DisconnectedTarget(f"target {target} unreachable from start on the true map")
    denom = int(reach.sum())

    robot = RobotState(pose=start)
    observed = new_observed(truth)
    log = RunLog(run_id=f"{scene.scene_id}-{policy}-s{seed}", strategy=policy, reached_target=False)
    sense(truth, observed, robot, lidar)
    cov = _coverage_pct(observed, reach, denom)
    log.steps.append(StepRecord(0, robot.pose, robot.traveled, cov))

    steps_moved = 0

    def walk(field: CostField, goal: CellIndex, commit: bool) -> str:
        """Advance along the tree path to goal. Returns why we stopped:
        "arrived", "capped", or "reevaluate"."""
        nonlocal steps_moved, cov
        path = field.path_to(goal)
        for k in range(1, len(path)):
            here, nxt = path[k - 1], path[k]
            diagonal = here.row != nxt.row and here.col != nxt.col
            robot.pose = cell_to_world(observed, nxt)
            robot.traveled += truth.resolution * (_SQRT2 if diagonal else 1.0)
            steps_moved += 1
            informative = False
            if steps_moved % cfg.sense_every == 0 or nxt == goal:
                informative = sense(truth, observed, robot, lidar) > 0
                if informative:
                    cov = _coverage_pct(observed, reach, denom)
            log.steps.append(StepRecord(steps_moved, robot.pose, robot.traveled, cov))
            if steps_moved >= cfg.step_cap:
                return "capped"
            if nxt == goal:
                return "arrived"
            if informative and not commit:
                return "reevaluate"
        return "arrived"

    while True:
        robot_cell = world_to_cell(observed, robot.pose)
        if robot_cell == target_cell:
            log.reached_target = True
            break
        if steps_moved >= cfg.step_cap:
            log.incomplete = True
            break
        field = cost_field(observed, robot_cell)
        direct = field.cost_to(target_cell)
        if math.isfinite(direct):
            log.decisions.append(
                DecisionRecord(steps_moved, target_cell, None, None, direct, direct, robot.traveled, cov)
            )
            outcome = walk(field, target_cell, commit=True)
            if outcome == "capped":
                log.incomplete = True
            else:
                log.reached_target = True
            break

        clusters = detect_frontiers(observed)
        if not clusters:
            # Truth-connected target with no frontier left cannot happen
            # with a perfect sensor; bail out rather than spin.
            log.incomplete = True
            break
        if policy == "predicted":
            windows = [extract_window(observed, f, lidar.max_range) for f in clusters]
            locals_ = [predict(endpoint, w) for w in windows]
            merged = merge_local_predictions(observed, clusters, locals_)
        else:
            merged = _observed_as_predicted(observed)
        beyond = cost_field(merged.map, target_cell, traversable_optimistic)

        best_i = -1
        best_total = math.inf
        best_nav = math.inf
        for i, f in enumerate(clusters):
            nav = field.cost_to(f.representative)
            if not math.isfinite(nav):
                continue
            est = beyond.cost_to(f.representative)
            total = nav + est
            if total < best_total:
                best_i, best_total, best_nav = i, total, nav
        if best_i < 0:
            # Every estimate ran into a predicted wall; fall back to the
            # nearest reachable frontier so progress never stalls.
            for i, f in enumerate(clusters):
                nav = field.cost_to(f.representative)
                if math.isfinite(nav) and nav < best_nav:
                    best_i, best_nav = i, nav
            best_total = math.inf
        if best_i < 0:
            raise NoReachableFrontier(f"all {len(clusters)} frontiers unreachable")

        goal = clusters[best_i].representative
        log.decisions.append(
            DecisionRecord(steps_moved, goal, None, None, best_nav, best_total, robot.traveled, cov)
        )
        outcome = walk(field, goal, commit=False)
        if outcome == "capped":
            log.incomplete = True
            break
        if outcome == "arrived" and world_to_cell(observed, robot.pose) == goal:
            # Standing on the goal without new returns: scan once more so
            # the frontier dissolves and the next choice differs.
            if sense(truth, observed, robot, lidar) > 0:
                cov = _coverage_pct(observed, reach, denom)

    log.traveled_m = robot.traveled
    log.coverage_pct = _coverage_pct(observed, reach, denom)
    log.final_map = observed
    return log


# ---------------------------------------------------------------------------
# serialization


def _csv_num(value: float | int | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def runlog_to_csv(log: RunLog) -> str:
    """Render decisions as CSV, one row per goal choice.

    The trailing summary row reuses the U column for the decision count;
    wall-clock time is deliberately absent so identical runs serialize to
    identical bytes.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["run_id", "step", "strategy", "chosen_row", "chosen_col", "I", "d", "C", "U", "traveled_m", "coverage_pct"]
    )
    for d in log.decisions:
        writer.writerow(
            [
                log.run_id,
                d.step,
                log.strategy,
                int(d.chosen[0]),
                int(d.chosen[1]),
                _csv_num(d.gain),
                _csv_num(d.hops),
                _csv_num(d.cost),
                _csv_num(d.utility),
                _csv_num(d.traveled_m),
                _csv_num(d.coverage_pct),
            ]
        )
    writer.writerow(
        [
            log.run_id,
            "summary",
            log.strategy,
            "",
            "",
            "",
            "",
            "",
            len(log.decisions),
            _csv_num(log.traveled_m),
            _csv_num(log.coverage_pct),
        ]
    )
    return buf.getvalue()
