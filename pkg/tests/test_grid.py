from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predexplore.grid import (
    CellIndex,
    CellState,
    EmptyRegion,
    GridMap,
    OutOfBounds,
    WorldPoint,
    cell_to_world,
    clone_region,
    count_cells,
    flood_fill,
    read_pgm,
    world_to_cell,
    write_pgm,
)

FREE = int(CellState.FREE)
UNKNOWN = int(CellState.UNKNOWN)
OCCUPIED = int(CellState.OCCUPIED)


def grid_of(array, resolution=0.2, origin=(0.0, 0.0)):
    return GridMap(np.asarray(array, dtype=np.uint8), resolution, WorldPoint(*origin))


def free_grid(h, w, resolution=0.2, origin=(0.0, 0.0)):
    return grid_of(np.full((h, w), FREE), resolution, origin)


class TestGridMapConstruction:
    def test_rejects_bad_byte(self):
        cells = np.full((3, 3), FREE, dtype=np.uint8)
        cells[1, 2] = 7
        with pytest.raises(ValueError, match=r"\(1,2\)"):
            GridMap(cells)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            GridMap(np.zeros((0, 4), dtype=np.uint8))

    def test_rejects_non_positive_resolution(self):
        with pytest.raises(ValueError):
            GridMap(np.full((2, 2), FREE, dtype=np.uint8), resolution=0.0)


class TestWorldCellTransform:
    def test_basic_mapping(self):
        g = free_grid(10, 10)
        assert world_to_cell(g, (1.0, 0.5)) == CellIndex(2, 5)

    def test_negative_origin(self):
        g = free_grid(10, 10, origin=(-1.0, -1.0))
        assert world_to_cell(g, (-0.9, -0.9)) == CellIndex(0, 0)

    def test_max_edge_is_outside(self):
        g = free_grid(10, 10)  # covers [0, 2) x [0, 2)
        with pytest.raises(OutOfBounds):
            world_to_cell(g, (2.0, 1.0))
        with pytest.raises(OutOfBounds):
            world_to_cell(g, (1.0, 2.0))

    def test_min_edge_is_inside(self):
        g = free_grid(10, 10)
        assert world_to_cell(g, (0.0, 0.0)) == CellIndex(0, 0)

    def test_cell_center(self):
        g = free_grid(10, 10)
        assert cell_to_world(g, (2, 5)) == pytest.approx((1.1, 0.5))

    def test_cell_to_world_bounds(self):
        g = free_grid(4, 4)
        with pytest.raises(OutOfBounds):
            cell_to_world(g, (4, 0))

    @given(row=st.integers(0, 29), col=st.integers(0, 39))
    def test_roundtrip_identity(self, row, col):
        g = free_grid(30, 40, origin=(-3.0, 1.5))
        assert world_to_cell(g, cell_to_world(g, (row, col))) == CellIndex(row, col)

    @given(
        x=st.floats(-3.0, 4.999),
        y=st.floats(1.5, 7.499),
    )
    @settings(max_examples=200)
    def test_containment(self, x, y):
        # the point must fall inside the half-open square of its cell
        g = free_grid(30, 40, origin=(-3.0, 1.5))
        r, c = world_to_cell(g, (x, y))
        assert g.origin.x + c * 0.2 - 1e-9 <= x < g.origin.x + (c + 1) * 0.2 + 1e-9
        assert g.origin.y + r * 0.2 - 1e-9 <= y < g.origin.y + (r + 1) * 0.2 + 1e-9


class TestFloodFill:
    def test_blocked_ring(self):
        cells = np.full((5, 5), FREE, dtype=np.uint8)
        cells[1:4, 1:4] = OCCUPIED
        cells[2, 2] = FREE
        g = grid_of(cells)
        inner = flood_fill(g, (2, 2), {FREE})
        assert inner == {CellIndex(2, 2)}
        outer = flood_fill(g, (0, 0), {FREE})
        assert len(outer) == 25 - 9 + 1 - 1  # all free cells outside the ring
        assert CellIndex(2, 2) not in outer

    def test_seed_not_passable(self):
        g = free_grid(3, 3)
        assert flood_fill(g, (1, 1), {OCCUPIED}) == set()

    def test_diagonal_gap_4_vs_8(self):
        cells = np.array(
            [
                [FREE, OCCUPIED],
                [OCCUPIED, FREE],
            ],
            dtype=np.uint8,
        )
        g = grid_of(cells)
        assert flood_fill(g, (0, 0), {FREE}, connectivity=4) == {CellIndex(0, 0)}
        assert flood_fill(g, (0, 0), {FREE}, connectivity=8) == {CellIndex(0, 0), CellIndex(1, 1)}

    def test_multi_state_passable(self):
        cells = np.array([[FREE, UNKNOWN, FREE]], dtype=np.uint8)
        g = grid_of(cells)
        assert len(flood_fill(g, (0, 0), {FREE})) == 1
        assert len(flood_fill(g, (0, 0), {FREE, UNKNOWN})) == 3

    def test_bad_connectivity(self):
        with pytest.raises(ValueError):
            flood_fill(free_grid(2, 2), (0, 0), {FREE}, connectivity=6)


class TestCountCells:
    def test_partition(self):
        rng = np.random.default_rng(3)
        cells = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(17, 23)).astype(np.uint8)
        g = grid_of(cells)
        total = sum(count_cells(g, s) for s in CellState)
        assert total == 17 * 23


class TestCloneRegion:
    def test_single_cell_pads(self):
        g = free_grid(1, 1)
        w = clone_region(g, (0, 0), 1)
        assert w.cells.shape == (2, 2)
        assert w.cells[1, 1] == FREE
        assert np.count_nonzero(w.cells == UNKNOWN) == 3
        # top-left of the window sits one cell below/left of the source origin
        assert w.origin == pytest.approx((-0.2, -0.2))

    def test_window_padding_shape(self):
        g = free_grid(100, 100)
        w = clone_region(g, (0, 0), 60)
        assert w.cells.shape == (120, 120)
        # rows/cols below zero are padding: everything with r<60 or c<60
        assert np.count_nonzero(w.cells == UNKNOWN) == 120 * 120 - 60 * 60

    def test_interior_window_is_slice(self):
        rng = np.random.default_rng(11)
        cells = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(40, 40)).astype(np.uint8)
        g = grid_of(cells)
        w = clone_region(g, (20, 20), 5)
        assert np.array_equal(w.cells, cells[15:25, 15:25])

    def test_world_alignment(self):
        g = free_grid(40, 40, origin=(2.0, -1.0))
        w = clone_region(g, (10, 12), 4)
        assert cell_to_world(w, (4, 4)) == pytest.approx(cell_to_world(g, (10, 12)))

    def test_empty_region(self):
        with pytest.raises(EmptyRegion):
            clone_region(free_grid(4, 4), (2, 2), 0)

    def test_source_unmodified(self):
        g = free_grid(4, 4)
        before = g.cells.copy()
        w = clone_region(g, (1, 1), 3)
        w.cells[:] = OCCUPIED
        assert np.array_equal(g.cells, before)


class TestPgmRoundTrip:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        cells = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(13, 9)).astype(np.uint8)
        g = grid_of(cells, resolution=0.2, origin=(-1.4, 3.0))
        p = tmp_path / "snap.pgm"
        write_pgm(g, p)
        back = read_pgm(p)
        assert np.array_equal(back.cells, g.cells)
        assert back.resolution == g.resolution
        assert back.origin == g.origin

    def test_header_layout(self, tmp_path):
        g = free_grid(2, 3)
        p = tmp_path / "snap.pgm"
        write_pgm(g, p)
        head = p.read_bytes().split(b"\n")
        assert head[0] == b"P5"
        assert head[1] == b"# resolution=0.2 origin=0.0,0.0"
        assert head[2] == b"3 2"
        assert head[3] == b"255"

    def test_truncated_rejected(self, tmp_path):
        g = free_grid(4, 4)
        p = tmp_path / "snap.pgm"
        write_pgm(g, p)
        data = p.read_bytes()
        p.write_bytes(data[:-3])
        with pytest.raises(ValueError, match="truncated"):
            read_pgm(p)

    def test_deterministic_bytes(self, tmp_path):
        g = free_grid(5, 5)
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        write_pgm(g, a)
        write_pgm(g, b)
        assert a.read_bytes() == b.read_bytes()
