"""Multi-object tracking with particle filters and an online structural graph model."""

from sgtrack.geometry import BBox, Point2, edge_angle, edge_distance, iou, overlap_ratio

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Point2",
    "edge_angle",
    "edge_distance",
    "iou",
    "overlap_ratio",
]
