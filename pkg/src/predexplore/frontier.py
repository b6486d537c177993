"""Frontier detection: the boundary between explored and unexplored space.

A frontier cell is a Free cell with at least one 4-adjacent Unknown cell.
Cells outside the map count as Occupied, so the map edge never produces
frontiers.  Frontier cells are grouped 8-connected and each cluster is
summarized by a representative cell for planning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import CellIndex, CellState, GridMap, clone_region

DEFAULT_MIN_CLUSTER = 3
DEFAULT_SENSE_RANGE = 12.0


@dataclass(frozen=True)
class FrontierCluster:
    cells: tuple[CellIndex, ...]  # row-major order
    representative: CellIndex

    @property
    def size(self) -> int:
        return len(self.cells)


@dataclass
class LocalWindow:
    """A square cutout of the observed map centered on a frontier."""

    window: GridMap
    center: CellIndex  # cell in the source map the window is centered on
    half_width: int


def frontier_mask(observed: GridMap) -> np.ndarray:
    """Boolean mask of frontier cells."""
    cells = observed.cells
    unknown = cells == int(CellState.UNKNOWN)
    free = cells == int(CellState.FREE)
    adj = np.zeros_like(unknown)
    adj[:-1, :] |= unknown[1:, :]
    adj[1:, :] |= unknown[:-1, :]
    adj[:, :-1] |= unknown[:, 1:]
    adj[:, 1:] |= unknown[:, :-1]
    return free & adj


def detect_frontiers(observed: GridMap, min_cluster_size: int = DEFAULT_MIN_CLUSTER) -> list[FrontierCluster]:
    """Cluster frontier cells and pick a representative per cluster.

    The representative is the cluster cell nearest the centroid, breaking
    ties toward the smallest (row, col); clusters come back sorted by
    representative so identical maps always yield identical lists.
    """
    mask = frontier_mask(observed)
    if not mask.any():
        return []
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    clusters: list[FrontierCluster] = []
    for k in range(1, n + 1):
        rc = np.argwhere(labels == k)  # row-major sorted
        if len(rc) < min_cluster_size:
            continue
        m = len(rc)
        # compare m^2 * squared-distance-to-centroid in exact integer math
        dr = m * rc[:, 0].astype(np.int64) - int(rc[:, 0].sum())
        dc = m * rc[:, 1].astype(np.int64) - int(rc[:, 1].sum())
        d2 = dr * dr + dc * dc
        best = np.lexsort((rc[:, 1], rc[:, 0], d2))[0]
        rep = CellIndex(int(rc[best, 0]), int(rc[best, 1]))
        cells = tuple(CellIndex(int(r), int(c)) for r, c in rc)
        clusters.append(FrontierCluster(cells, rep))
    clusters.sort(key=lambda cl: cl.representative)
    return clusters


def extract_window(
    observed: GridMap,
    cluster: FrontierCluster,
    sense_range: float = DEFAULT_SENSE_RANGE,
) -> LocalWindow:
    """Cut the square window of half-width sense_range around a frontier.

    The half-width in cells is sense_range / resolution; parts of the
    window outside the map are padded Unknown by clone_region.
    """
    hw = int(round(sense_range / observed.resolution))
    if hw < 1:
        raise ValueError(f"sense range {sense_range} is below one cell")
    window = clone_region(observed, cluster.representative, hw)
    return LocalWindow(window, cluster.representative, hw)
