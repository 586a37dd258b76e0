"""The model graph: per-edge angle/distance histograms learned online.

Each directed edge (i, j) of the adjacency matrix holds two attribute
histograms, one for the clockwise angle of the vector from object i to
object j (circular, over [0, 2pi)) and one for their distance divided by the
image width (bounded, over [0, 1]). Every observation is voted in by
centring a confidence-dependent smoothing kernel on the observed bin.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from sgtrack.appearance import Frame, extract_histogram
from sgtrack.geometry import TWO_PI, BBox, DegenerateEdgeError, Point2, edge_angle, edge_distance

log = logging.getLogger(__name__)

KERNEL_HIGH = (0.3, 0.4, 0.3)
KERNEL_MID = (0.15, 0.2, 0.3, 0.2, 0.15)
KERNEL_LOW = (0.1, 0.13, 0.17, 0.2, 0.17, 0.13, 0.1)
DEFAULT_KERNELS = (KERNEL_HIGH, KERNEL_MID, KERNEL_LOW)
KERNEL_THRESHOLDS = (0.7, 0.3)

THETA_BINS = 18
DIST_BINS = 25
MASS_TOL = 1e-9


def kernel_sums_to_one(kernel: Sequence[float]) -> bool:
    """Exact check on the decimal values of the taps."""
    return sum(Fraction(str(v)) for v in kernel) == 1


def check_kernels(kernels: Sequence[Sequence[float]]) -> None:
    for k in kernels:
        if len(k) % 2 != 1:
            raise ValueError(f"kernel {k} must have an odd number of taps")
        if any(v < 0 for v in k) or abs(math.fsum(k) - 1.0) > 1e-12:
            raise ValueError(f"kernel {k} must be non-negative and sum to 1")


check_kernels(DEFAULT_KERNELS)
assert all(kernel_sums_to_one(k) for k in DEFAULT_KERNELS)


def select_kernel(confidence: float, kernels: Sequence[Sequence[float]] = DEFAULT_KERNELS) -> tuple[float, ...]:
    """Narrow kernel for confident observations, wider ones as confidence drops."""
    high, low = KERNEL_THRESHOLDS
    if confidence > high:
        return tuple(kernels[0])
    if confidence > low:
        return tuple(kernels[1])
    return tuple(kernels[2])


class EmptyHistogramError(ValueError):
    pass


class AttributeHistogram:
    def __init__(self, n_bins: int, lo: float, hi: float, circular: bool, bins: np.ndarray | None = None):
        if n_bins < 1 or not hi > lo:
            raise ValueError(f"invalid histogram layout: {n_bins} bins over [{lo}, {hi}]")
        self.n_bins = n_bins
        self.lo = float(lo)
        self.hi = float(hi)
        self.circular = circular
        self.bins = np.zeros(n_bins) if bins is None else np.asarray(bins, dtype=float).copy()
        if self.bins.shape != (n_bins,):
            raise ValueError("bin array length does not match n_bins")

    @classmethod
    def angle(cls, n_bins: int = THETA_BINS) -> "AttributeHistogram":
        return cls(n_bins, 0.0, TWO_PI, circular=True)

    @classmethod
    def distance(cls, n_bins: int = DIST_BINS, lo: float = 0.0, hi: float = 1.0) -> "AttributeHistogram":
        return cls(n_bins, lo, hi, circular=False)

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def total(self) -> float:
        return float(self.bins.sum())

    def bin_index(self, value: float) -> int:
        offset = value - self.lo
        if self.circular:
            offset %= self.hi - self.lo
        idx = math.floor(offset / (self.hi - self.lo) * self.n_bins)
        return min(max(idx, 0), self.n_bins - 1)

    def bin_center(self, idx):
        return self.lo + (np.asarray(idx) + 0.5) * self.bin_width

    def vote(self, value: float, kernel: Sequence[float]) -> "AttributeHistogram":
        if value is None or math.isnan(value):
            raise ValueError("cannot vote a NaN measurement")
        if abs(math.fsum(kernel) - 1.0) > 1e-12:
            raise ValueError(f"kernel {kernel} does not sum to 1")
        center = self.bin_index(value)
        half = len(kernel) // 2
        idx = center + np.arange(len(kernel)) - half
        if self.circular:
            idx %= self.n_bins
        else:
            idx = np.clip(idx, 0, self.n_bins - 1)
        np.add.at(self.bins, idx, np.asarray(kernel, dtype=float))
        return self

    def lookup_likelihood(self, value: float) -> float:
        """Mass of the bin holding ``value`` relative to the fullest bin."""
        peak = self.bins.max()
        if not peak > 0:
            raise EmptyHistogramError("lookup on an empty histogram")
        return float(self.bins[self.bin_index(value)] / peak)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Bin-centre values drawn with probability proportional to bin mass."""
        total = self.total
        if not total > 0:
            raise EmptyHistogramError("cannot sample an empty histogram")
        idx = rng.choice(self.n_bins, size=size, p=self.bins / total)
        return self.bin_center(idx)

    def copy(self) -> "AttributeHistogram":
        return AttributeHistogram(self.n_bins, self.lo, self.hi, self.circular, self.bins)

    def __repr__(self) -> str:
        kind = "circular" if self.circular else "bounded"
        return f"AttributeHistogram({self.n_bins}, [{self.lo}, {self.hi}], {kind}, mass={self.total:.3f})"


def validate_adjacency(adjacency) -> np.ndarray:
    m = np.asarray(adjacency)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {m.shape}")
    if not np.isin(m, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if np.any(np.diag(m) != 0):
        raise ValueError("adjacency diagonal must be zero")
    if not m.any():
        raise ValueError("adjacency has no edges")
    return m.astype(np.int64)


def measure_edge(origin: Point2, target: Point2, image_width: float) -> tuple[float, float]:
    """(angle, normalised distance) of an edge; coincident points measure as (0, 0)."""
    try:
        return edge_angle(origin, target), edge_distance(origin, target, image_width)
    except DegenerateEdgeError:
        return 0.0, 0.0


@dataclass
class ModelGraph:
    adjacency: np.ndarray
    vertex_hists: list[np.ndarray]
    image_width: float
    theta: dict[tuple[int, int], AttributeHistogram] = field(default_factory=dict)
    dist: dict[tuple[int, int], AttributeHistogram] = field(default_factory=dict)

    @property
    def n_objects(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def out_degree(self, i: int) -> int:
        return int(self.adjacency[i].sum())

    def edge_likelihoods(self, i: int, j: int, origin: Point2, target: Point2) -> tuple[float, float]:
        theta, d = measure_edge(origin, target, self.image_width)
        return self.theta[i, j].lookup_likelihood(theta), self.dist[i, j].lookup_likelihood(d)

    def vote_edges(self, positions: Sequence[Point2], confidences: Sequence[float], kernels=DEFAULT_KERNELS) -> None:
        for i, j in self.edges:
            kernel = select_kernel(confidences[i], kernels)
            theta, d = measure_edge(positions[i], positions[j], self.image_width)
            self.theta[i, j].vote(theta, kernel)
            self.dist[i, j].vote(d, kernel)

    def to_text(self) -> str:
        out = io.StringIO()
        n = self.n_objects
        out.write("sgtrack-model 1\n")
        out.write(f"objects {n}\n")
        out.write(f"image_width {self.image_width!r}\n")
        for row in self.adjacency:
            out.write("adjacency " + " ".join(str(int(v)) for v in row) + "\n")
        for i, h in enumerate(self.vertex_hists):
            out.write(f"vertex {i} " + " ".join(repr(float(v)) for v in h) + "\n")
        for i, j in self.edges:
            for name, hist in (("theta", self.theta[i, j]), ("dist", self.dist[i, j])):
                kind = "circular" if hist.circular else "bounded"
                head = f"edge {i} {j} {name} {kind} {hist.lo!r} {hist.hi!r} {hist.n_bins} "
                out.write(head + " ".join(repr(float(v)) for v in hist.bins) + "\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ModelGraph":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != ["sgtrack-model", "1"]:
            raise ValueError("not a model graph document")
        rows, vertices, theta, dist = [], {}, {}, {}
        image_width = None
        for parts in lines[1:]:
            key = parts[0]
            if key == "objects":
                continue
            if key == "image_width":
                image_width = float(parts[1])
            elif key == "adjacency":
                rows.append([int(v) for v in parts[1:]])
            elif key == "vertex":
                vertices[int(parts[1])] = np.array([float(v) for v in parts[2:]])
            elif key == "edge":
                i, j, name, kind = int(parts[1]), int(parts[2]), parts[3], parts[4]
                lo, hi, nb = float(parts[5]), float(parts[6]), int(parts[7])
                hist = AttributeHistogram(nb, lo, hi, kind == "circular", [float(v) for v in parts[8:]])
                (theta if name == "theta" else dist)[i, j] = hist
            else:
                raise ValueError(f"unknown model record {key!r}")
        adjacency = validate_adjacency(rows)
        model = cls(adjacency, [vertices[i] for i in range(len(rows))], image_width, theta, dist)
        if set(model.theta) != set(model.edges) or set(model.dist) != set(model.edges):
            raise ValueError("edge histograms do not match the adjacency matrix")
        return model


def init_model(
    boxes: Sequence[BBox],
    frame: Frame,
    adjacency,
    image_width: float | None = None,
    theta_bins: int = THETA_BINS,
    dist_bins: int = DIST_BINS,
    dist_range: tuple[float, float] = (0.0, 1.0),
    kernels=DEFAULT_KERNELS,
) -> ModelGraph:
    """Build the model from first-frame annotations, voted at full confidence."""
    adjacency = validate_adjacency(adjacency)
    n = adjacency.shape[0]
    if len(boxes) != n or any(b is None for b in boxes):
        raise ValueError(f"expected an annotation for each of {n} objects, got {len(boxes)}")
    width = float(frame.width if image_width is None else image_width)
    model = ModelGraph(adjacency, [extract_histogram(frame, b) for b in boxes], width)
    for edge in model.edges:
        model.theta[edge] = AttributeHistogram.angle(theta_bins)
        model.dist[edge] = AttributeHistogram.distance(dist_bins, *dist_range)
    model.vote_edges([b.center for b in boxes], [1.0] * n, kernels)
    return model


def update_model(
    model: ModelGraph,
    positions: Sequence[Point2],
    confidences: Sequence[float],
    kernels=DEFAULT_KERNELS,
) -> ModelGraph:
    """Vote the selected positions into every edge; the kernel follows the origin's confidence."""
    model.vote_edges(positions, confidences, kernels)
    return model
