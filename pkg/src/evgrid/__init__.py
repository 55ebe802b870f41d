"""Evidential dynamic occupancy grids at desk scale.

Simulated LiDAR scenes are fused into Dempster-Shafer dynamic grids with a
particle filter for per-cell velocities; generic dynamic objects are
extracted by the classic DBSCAN baseline or evaluated from external
detector predictions with rotated-box precision/recall tooling.
"""

from .cluster import ClusterParams, classic_detect, dbscan, extract_dynamic_cells, fit_box
from .fusion import FusionConfig, FusionPipeline, fuse_frame
from .grid import BeliefMasses, ChannelTensor, DynamicGrid, GridGeometry, colorize, encode_grid
from .metrics import compare_to_classic, match_frame, operating_point, pr_curve
from .rotbox import Detection, RotatedBox, canonicalize, corners, rotated_iou
from .scene import Entity, LidarScan, SceneScript, ground_truth, raycast, step_scene
from .scenarios import FIGURE_SUITE, canned_scenario

__version__ = "0.1.0"

__all__ = [
    "BeliefMasses",
    "ChannelTensor",
    "ClusterParams",
    "Detection",
    "DynamicGrid",
    "Entity",
    "FIGURE_SUITE",
    "FusionConfig",
    "FusionPipeline",
    "GridGeometry",
    "LidarScan",
    "RotatedBox",
    "SceneScript",
    "canned_scenario",
    "canonicalize",
    "classic_detect",
    "colorize",
    "compare_to_classic",
    "corners",
    "dbscan",
    "encode_grid",
    "extract_dynamic_cells",
    "fit_box",
    "fuse_frame",
    "ground_truth",
    "match_frame",
    "operating_point",
    "pr_curve",
    "raycast",
    "rotated_iou",
    "step_scene",
]
