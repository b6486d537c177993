"""Deterministic 2D exploration and navigation simulator with pluggable floor-plan predictors."""

from .grid import CellIndex, CellState, GridMap, WorldPoint, read_pgm, write_pgm
from .scene import ClutterParams, Scene, generate_synthetic_floorplan, parse_scene_file, save_scene_file, with_clutter
from .sensor import LidarConfig, RobotState, sense
from .frontier import FrontierCluster, detect_frontiers, extract_window
from .prediction import (
    EchoServer,
    ExternalPredictor,
    NullPredictor,
    OraclePredictor,
    PredictedMap,
    endpoint_from_spec,
    merge_local_predictions,
    predict,
)
from .topology import RoomGraph, build_room_graph, detect_critical_points, distance_transform, room_of, topo_distance
from .planning import cost_field, nav_cost, optimistic_cost, shortest_path
from .strategy import ExploreConfig, RunLog, run_exploration, run_navigation, runlog_to_csv

__version__ = "0.1.0"

__all__ = [
    "CellIndex",
    "CellState",
    "ClutterParams",
    "ExploreConfig",
    "ExternalPredictor",
    "FrontierCluster",
    "GridMap",
    "LidarConfig",
    "NullPredictor",
    "OraclePredictor",
    "PredictedMap",
    "RobotState",
    "RoomGraph",
    "RunLog",
    "Scene",
    "WorldPoint",
    "build_room_graph",
    "cost_field",
    "detect_critical_points",
    "detect_frontiers",
    "distance_transform",
    "endpoint_from_spec",
    "extract_window",
    "generate_synthetic_floorplan",
    "merge_local_predictions",
    "nav_cost",
    "optimistic_cost",
    "parse_scene_file",
    "predict",
    "read_pgm",
    "room_of",
    "run_exploration",
    "run_navigation",
    "runlog_to_csv",
    "save_scene_file",
    "sense",
    "shortest_path",
    "topo_distance",
    "with_clutter",
    "write_pgm",
]
