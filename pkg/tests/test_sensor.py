from __future__ import annotations

import math

import numpy as np
import pytest

from predexplore.grid import CellIndex, CellState, GridMap, WorldPoint
from predexplore.scene import ClutterParams, generate_synthetic_floorplan, inject_clutter
from predexplore.sensor import (
    InvalidPose,
    LidarConfig,
    RobotState,
    cast_ray,
    new_observed,
    scan_angles,
    sense,
)

FREE = int(CellState.FREE)
UNKNOWN = int(CellState.UNKNOWN)
OCCUPIED = int(CellState.OCCUPIED)


def free_map(h, w):
    return GridMap(np.full((h, w), FREE, dtype=np.uint8))


class TestCastRay:
    def test_open_map_range_stop_from_cell_center(self):
        g = free_map(200, 200)  # 40 m square
        traversed, hit = cast_ray(g, WorldPoint(20.1, 20.1), 0.0, max_range=12.0)
        assert hit is None
        # entry of cell k along the row is at 0.2k - 0.1 m, so 60 boundary
        # crossings happen strictly inside the 12 m range
        assert len(traversed) == 61
        assert traversed[0] == (100, 100)
        assert traversed[-1] == (100, 160)

    def test_open_map_range_stop_from_cell_corner(self):
        g = free_map(200, 200)
        traversed, hit = cast_ray(g, WorldPoint(20.0, 20.0), 0.0, max_range=12.0)
        assert hit is None
        assert len(traversed) == 60

    def test_wall_hit(self):
        g = free_map(20, 20)
        g.cells[:, 15] = OCCUPIED  # wall at x = 3.0
        traversed, hit = cast_ray(g, WorldPoint(1.1, 1.1), 0.0)
        assert hit == (5, 15)
        assert [c for _, c in traversed] == list(range(5, 15))

    def test_map_edge_stop(self):
        g = free_map(10, 10)  # 2 m square
        traversed, hit = cast_ray(g, WorldPoint(1.1, 1.1), 0.0, max_range=12.0)
        assert hit is None
        assert traversed[-1] == (5, 9)

    def test_pure_vertical(self):
        g = free_map(10, 10)
        traversed, hit = cast_ray(g, WorldPoint(1.1, 0.3), math.pi / 2, max_range=1.0)
        assert hit is None
        assert [r for r, _ in traversed] == [1, 2, 3, 4, 5, 6]
        assert all(c == 5 for _, c in traversed)

    def test_start_inside_wall(self):
        g = free_map(5, 5)
        g.cells[2, 2] = OCCUPIED
        traversed, hit = cast_ray(g, WorldPoint(0.5, 0.5), 0.0)
        assert traversed == []
        assert hit == (2, 2)

    def test_occlusion(self):
        g = free_map(20, 20)
        g.cells[:, 10] = OCCUPIED
        traversed, _ = cast_ray(g, WorldPoint(0.5, 1.1), 0.0)
        assert all(c < 10 for _, c in traversed)

    def test_corner_tie_is_blocked_by_supercover_wall(self):
        # diagonal ray aimed exactly through a lattice corner flanked by walls
        g = free_map(10, 10)
        g.cells[5, 4] = OCCUPIED
        g.cells[4, 5] = OCCUPIED
        traversed, hit = cast_ray(g, WorldPoint(0.9, 0.9), math.pi / 4)
        assert hit == (4, 5)  # x-neighbour checked first at the tie
        assert CellIndex(5, 5) not in traversed

    def test_unknown_cells_are_traversed(self):
        g = free_map(3, 10)
        g.cells[:, 6:] = UNKNOWN
        traversed, hit = cast_ray(g, WorldPoint(0.1, 0.3), 0.0, max_range=5.0)
        assert hit is None
        assert CellIndex(1, 8) in traversed


class TestSense:
    def test_matches_cast_ray_union(self):
        # the batch kernel must agree exactly with per-ray casting
        scene = generate_synthetic_floorplan(11, 2, 2, (4.0, 6.0))
        truth = GridMap(
            inject_clutter(scene, ClutterParams(), seed=5).cells,
            scene.floorplan.resolution,
            scene.floorplan.origin,
        )
        lidar = LidarConfig(max_range=9.0, rays_per_scan=73)
        rng = np.random.default_rng(0)
        free_rc = np.argwhere(truth.cells == FREE)
        for _ in range(5):
            r, c = free_rc[rng.integers(len(free_rc))]
            pose = WorldPoint(
                truth.origin.x + (c + 0.5) * 0.2,
                truth.origin.y + (r + 0.5) * 0.2,
            )
            fast = new_observed(truth)
            changed = sense(truth, fast, RobotState(pose), lidar)
            slow = new_observed(truth)
            for ang in scan_angles(lidar):
                traversed, hit = cast_ray(truth, pose, float(ang), lidar.max_range)
                for cell in traversed:
                    slow.cells[cell.row, cell.col] = FREE
                if hit is not None:
                    slow.cells[hit.row, hit.col] = OCCUPIED
            assert np.array_equal(fast.cells, slow.cells)
            assert changed == np.count_nonzero(slow.cells != UNKNOWN)

    def test_idempotent(self):
        scene = generate_synthetic_floorplan(3, 2, 1, (4.0, 5.0))
        truth = scene.cluttered
        obs = new_observed(truth)
        robot = RobotState(scene.interior_seed)
        lidar = LidarConfig()
        first = sense(truth, obs, robot, lidar)
        snapshot = obs.cells.copy()
        second = sense(truth, obs, robot, lidar)
        assert first > 0
        assert second == 0
        assert np.array_equal(obs.cells, snapshot)

    def test_soundness(self):
        scene = generate_synthetic_floorplan(9, 2, 2, (4.0, 6.0))
        truth = scene.cluttered
        obs = new_observed(truth)
        sense(truth, obs, RobotState(scene.interior_seed), LidarConfig())
        assert np.all(truth.cells[obs.cells == FREE] == FREE)
        assert np.all(truth.cells[obs.cells == OCCUPIED] == OCCUPIED)

    def test_monotone_across_poses(self):
        scene = generate_synthetic_floorplan(1, 2, 1, (4.0, 5.0))
        truth = scene.cluttered
        obs = new_observed(truth)
        lidar = LidarConfig(max_range=3.0)
        rng = np.random.default_rng(4)
        free_rc = np.argwhere(truth.cells == FREE)
        prev = obs.cells.copy()
        for _ in range(8):
            r, c = free_rc[rng.integers(len(free_rc))]
            pose = WorldPoint(truth.origin.x + (c + 0.5) * 0.2, truth.origin.y + (r + 0.5) * 0.2)
            sense(truth, obs, RobotState(pose), lidar)
            known_before = prev != UNKNOWN
            assert np.array_equal(obs.cells[known_before], prev[known_before])
            prev = obs.cells.copy()

    def test_invalid_pose_on_wall(self):
        scene = generate_synthetic_floorplan(1, 1, 1, (4.0, 4.0))
        truth = scene.floorplan
        obs = new_observed(truth)
        with pytest.raises(InvalidPose):
            sense(truth, obs, RobotState(WorldPoint(0.1, 0.1)), LidarConfig())

    def test_invalid_pose_outside(self):
        g = free_map(5, 5)
        with pytest.raises(InvalidPose):
            sense(g, new_observed(g), RobotState(WorldPoint(-3.0, 0.5)), LidarConfig())

    def test_geometry_mismatch(self):
        g = free_map(5, 5)
        with pytest.raises(ValueError, match="geometry"):
            sense(g, new_observed(free_map(4, 5)), RobotState(WorldPoint(0.5, 0.5)), LidarConfig())
