from __future__ import annotations

import numpy as np
import pytest

from predexplore.frontier import detect_frontiers, extract_window, frontier_mask
from predexplore.grid import CellIndex, CellState, GridMap, cell_to_world
from predexplore.scene import generate_synthetic_floorplan
from predexplore.sensor import LidarConfig, RobotState, new_observed, sense

FREE = int(CellState.FREE)
UNKNOWN = int(CellState.UNKNOWN)
OCCUPIED = int(CellState.OCCUPIED)


def grid_of(cells):
    return GridMap(np.asarray(cells, dtype=np.uint8))


class TestDetectFrontiers:
    def test_fully_observed_has_none(self):
        cells = np.full((10, 10), FREE, dtype=np.uint8)
        cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = OCCUPIED
        assert detect_frontiers(grid_of(cells)) == []

    def test_all_unknown_has_none(self):
        assert detect_frontiers(grid_of(np.full((8, 8), UNKNOWN))) == []

    def test_straight_boundary_single_cluster(self):
        cells = np.full((10, 20), UNKNOWN, dtype=np.uint8)
        cells[:5, :] = FREE
        found = detect_frontiers(grid_of(cells))
        assert len(found) == 1
        cluster = found[0]
        assert cluster.size == 20
        assert all(r == 4 for r, _ in cluster.cells)
        # centroid column is 9.5: tie between cols 9 and 10 goes low
        assert cluster.representative == CellIndex(4, 9)

    def test_two_openings_two_clusters(self):
        cells = np.full((10, 16), UNKNOWN, dtype=np.uint8)
        cells[:4, :] = FREE
        cells[4, :] = OCCUPIED
        cells[4, 2:5] = FREE  # opening A
        cells[4, 10:13] = FREE  # opening B
        found = detect_frontiers(grid_of(cells))
        assert len(found) == 2
        assert found[0].representative == CellIndex(4, 3)
        assert found[1].representative == CellIndex(4, 11)

    def test_small_cluster_dropped(self):
        cells = np.full((6, 6), OCCUPIED, dtype=np.uint8)
        cells[2, 2:4] = FREE
        cells[3, 2:4] = UNKNOWN
        assert detect_frontiers(grid_of(cells), min_cluster_size=3) == []
        assert len(detect_frontiers(grid_of(cells), min_cluster_size=2)) == 1

    def test_diagonal_unknown_is_not_frontier(self):
        cells = np.full((3, 3), OCCUPIED, dtype=np.uint8)
        cells[1, 1] = FREE
        cells[0, 0] = UNKNOWN
        assert not frontier_mask(grid_of(cells))[1, 1]

    def test_map_edge_is_not_frontier(self):
        cells = np.full((4, 4), FREE, dtype=np.uint8)
        assert detect_frontiers(grid_of(cells)) == []

    def test_cluster_properties_on_partial_scan(self):
        scene = generate_synthetic_floorplan(6, 2, 2, (4.0, 6.0))
        truth = scene.cluttered
        obs = new_observed(truth)
        sense(truth, obs, RobotState(scene.interior_seed), LidarConfig(max_range=4.0))
        found = detect_frontiers(obs)
        assert found, "a partial scan should leave frontiers"
        mask = frontier_mask(obs)
        seen = set()
        for cl in found:
            assert cl.representative in cl.cells
            for cell in cl.cells:
                assert mask[cell.row, cell.col]
                assert cell not in seen
                seen.add(cell)
            # 8-connectivity of each cluster
            group = set(cl.cells)
            todo = [cl.cells[0]]
            reached = {cl.cells[0]}
            while todo:
                r, c = todo.pop()
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        nb = CellIndex(r + dr, c + dc)
                        if nb in group and nb not in reached:
                            reached.add(nb)
                            todo.append(nb)
            assert reached == group

    def test_deterministic_and_sorted(self):
        scene = generate_synthetic_floorplan(6, 2, 2, (4.0, 6.0))
        obs = new_observed(scene.cluttered)
        sense(scene.cluttered, obs, RobotState(scene.interior_seed), LidarConfig(max_range=5.0))
        a = detect_frontiers(obs)
        b = detect_frontiers(obs)
        assert a == b
        reps = [cl.representative for cl in a]
        assert reps == sorted(reps)


class TestExtractWindow:
    def test_window_shape_and_center(self):
        scene = generate_synthetic_floorplan(6, 2, 2, (4.0, 6.0))
        obs = new_observed(scene.cluttered)
        sense(scene.cluttered, obs, RobotState(scene.interior_seed), LidarConfig())
        cluster = detect_frontiers(obs)[0]
        lw = extract_window(obs, cluster)
        assert lw.window.cells.shape == (120, 120)
        assert lw.half_width == 60
        rep = cluster.representative
        assert lw.window.cells[60, 60] == obs.cells[rep.row, rep.col]
        assert cell_to_world(lw.window, (60, 60)) == pytest.approx(cell_to_world(obs, rep))

    def test_padding_is_unknown(self):
        cells = np.full((30, 30), FREE, dtype=np.uint8)
        cells[20:, :] = UNKNOWN
        obs = grid_of(cells)
        cluster = detect_frontiers(obs)[0]
        lw = extract_window(obs, cluster)
        w = lw.window.cells
        # window extends far beyond the 30x30 map; everything outside is Unknown
        assert np.all(w[:, :30] != OCCUPIED)
        in_map = np.zeros_like(w, dtype=bool)
        r0 = cluster.representative.row - 60
        c0 = cluster.representative.col - 60
        in_map[-r0 : -r0 + 30, -c0 : -c0 + 30] = True
        assert np.all(w[~in_map] == UNKNOWN)
