"""Boxes, points and the pairwise edge measurements fed to the structural model.

Image coordinates throughout: origin at the top-left corner, x to the right,
y downward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class DegenerateEdgeError(ValueError):
    """Raised when an edge angle is requested between coincident points."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box stored as centroid plus size."""

    cx: float
    cy: float
    width: float
    height: float

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"box size must be positive, got {self.width}x{self.height}")
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.width, self.height)):
            raise ValueError("box coordinates must be finite")

    @classmethod
    def from_corner(cls, x: float, y: float, w: float, h: float) -> "BBox":
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    @classmethod
    def from_extent(cls, x0: float, y0: float, x1: float, y1: float) -> "BBox":
        return cls((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)

    @classmethod
    def at(cls, center: Point2, size: tuple[float, float]) -> "BBox":
        return cls(center.x, center.y, size[0], size[1])

    @property
    def center(self) -> Point2:
        return Point2(self.cx, self.cy)

    @property
    def x0(self) -> float:
        return self.cx - self.width / 2.0

    @property
    def y0(self) -> float:
        return self.cy - self.height / 2.0

    @property
    def x1(self) -> float:
        return self.cx + self.width / 2.0

    @property
    def y1(self) -> float:
        return self.cy + self.height / 2.0

    @property
    def area(self) -> float:
        return self.width * self.height

    def corner(self) -> tuple[float, float, float, float]:
        """(x, y, w, h) with (x, y) the top-left corner."""
        return (self.x0, self.y0, self.width, self.height)

    def extent(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def overlap_ratio(a: BBox, b: BBox) -> float:
    """Fraction of ``a`` covered by ``b``; normalised by the area of ``a`` only."""
    return intersection_area(a, b) / a.area


def iou(a: BBox, b: BBox) -> float:
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def edge_angle(origin: Point2, target: Point2) -> float:
    """Clockwise angle (y-down) from the +x axis to ``target - origin``, in [0, 2pi)."""
    dx = target.x - origin.x
    dy = target.y - origin.y
    if dx == 0.0 and dy == 0.0:
        raise DegenerateEdgeError("edge angle undefined for coincident points")
    angle = math.atan2(dy, dx) % TWO_PI
    # -0.0 and tiny negatives can round up to exactly 2pi
    return 0.0 if angle >= TWO_PI else angle


def edge_distance(origin: Point2, target: Point2, image_width: float) -> float:
    """Euclidean distance between the points divided by the image width."""
    if image_width <= 0:
        raise ValueError("image_width must be positive")
    return math.hypot(target.x - origin.x, target.y - origin.y) / image_width


def extents(centers: np.ndarray, size: tuple[float, float]) -> np.ndarray:
    """(n, 4) array of x0, y0, x1, y1 for boxes of a common size at ``centers``."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    half = np.array([size[0], size[1]], dtype=float) / 2.0
    return np.hstack([centers - half, centers + half])


def overlap_ratio_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise ``overlap_ratio`` for extent arrays ``a`` (n, 4) and ``b`` (m, 4)."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    w = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    h = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(w, 0.0, None) * np.clip(h, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    return inter / area_a[:, None]
