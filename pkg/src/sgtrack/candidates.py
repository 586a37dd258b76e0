"""Structural candidates: positions sampled from the model's edge histograms."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from sgtrack.appearance import Frame, box_likelihoods
from sgtrack.geometry import Point2, extents, overlap_ratio_matrix
from sgtrack.particle_filter import FilterParams, init_cloud
from sgtrack.scene import TrackerSet
from sgtrack.structural import ModelGraph

log = logging.getLogger(__name__)

DEFAULT_SIGMA_THETA = math.pi / 18
DEFAULT_SIGMA_DIST = 0.02


@dataclass
class Candidate:
    object_id: int
    position: Point2
    source_object: int
    appearance_score: float = float("nan")


def validate_candidate_matrix(matrix, adjacency) -> np.ndarray:
    m = np.asarray(matrix)
    a = np.asarray(adjacency)
    if m.shape != a.shape:
        raise ValueError(f"candidate matrix shape {m.shape} does not match adjacency {a.shape}")
    if np.any(m < 0) or np.any(m != np.round(m)):
        raise ValueError("candidate counts must be non-negative integers")
    if np.any(np.diag(m) != 0):
        raise ValueError("candidate matrix diagonal must be zero")
    if np.any((m > 0) & (a == 0)):
        raise ValueError("candidates requested along an edge missing from the adjacency matrix")
    return m.astype(np.int64)


def sample_candidates(
    model: ModelGraph,
    reference_positions: Sequence[Point2],
    candidate_matrix,
    noise: tuple[float, float],
    image_width: float,
    rng: np.random.Generator,
) -> list[Candidate]:
    """Draw ``candidate_matrix[i][j]`` positions for object j around reference object i."""
    sigma_theta, sigma_d = noise
    counts = np.asarray(candidate_matrix)
    out: list[Candidate] = []
    for i, j in zip(*np.nonzero(counts)):
        i, j, k = int(i), int(j), int(counts[i, j])
        h_theta, h_d = model.theta.get((i, j)), model.dist.get((i, j))
        if h_theta is None or h_d is None or h_theta.total <= 0 or h_d.total <= 0:
            log.warning("edge (%d, %d) has no learned histogram; skipping its candidates", i, j)
            continue
        theta = h_theta.sample(rng, k) + sigma_theta * rng.standard_normal(k)
        dist = np.maximum(h_d.sample(rng, k) + sigma_d * rng.standard_normal(k), 0.0)
        ref = reference_positions[i]
        xs = ref.x + dist * image_width * np.cos(theta)
        ys = ref.y + dist * image_width * np.sin(theta)
        out.extend(Candidate(j, Point2(float(x), float(y)), i) for x, y in zip(xs, ys))
    return out


def filter_candidates(
    candidates: Sequence[Candidate],
    existing_boxes: np.ndarray,
    frame: Frame,
    reference_hists: Sequence[np.ndarray],
    box_sizes: Mapping[int, tuple[float, float]] | Sequence[tuple[float, float]],
    tau_o: float,
    tau_s: float,
    sigma_b: float,
) -> list[Candidate]:
    """Drop candidates overlapping an older tracker or looking unlike their object.

    ``existing_boxes`` is an (m, 4) extent array of every tracker alive before
    spawning, whatever object it follows. Survivors are then thinned so that no
    two of them overlap beyond ``tau_o`` either (the earlier one wins).
    """
    existing = np.asarray(existing_boxes, dtype=float).reshape(-1, 4)
    keep = np.zeros(len(candidates), dtype=bool)
    scores = np.zeros(len(candidates))
    groups: dict[int, list[int]] = {}
    for n, c in enumerate(candidates):
        groups.setdefault(c.object_id, []).append(n)
    for obj, members in groups.items():
        size = box_sizes[obj]
        centers = np.array([[candidates[n].position.x, candidates[n].position.y] for n in members])
        ok = np.ones(len(members), dtype=bool)
        if len(existing):
            ok &= ~(overlap_ratio_matrix(extents(centers, size), existing) > tau_o).any(axis=1)
        lik = box_likelihoods(frame, reference_hists[obj], centers, size, sigma_b)
        ok &= (lik >= tau_s) & (lik > 0)  # zero only for boxes outside the frame
        keep[members] = ok
        scores[members] = lik

    survivors: list[Candidate] = []
    accepted = np.empty((0, 4))
    for n in np.flatnonzero(keep):
        c = candidates[n]
        box = extents(np.array([[c.position.x, c.position.y]]), box_sizes[c.object_id])
        if len(accepted) and (overlap_ratio_matrix(box, accepted) > tau_o).any():
            continue
        c.appearance_score = float(scores[n])
        survivors.append(c)
        accepted = np.vstack([accepted, box])
    return survivors


def spawn_trackers(
    survivors: Sequence[Candidate],
    tracker_sets: Sequence[TrackerSet],
    params: FilterParams,
    seed: int,
) -> list[tuple[int, int]]:
    """Add one zero-weight tracker per surviving candidate; returns (object, tracker id) pairs."""
    added = []
    for c in survivors:
        tset = tracker_sets[c.object_id]
        tid = tset.next_id
        rng = tracker_rng(seed, c.object_id, tid)
        cloud = init_cloud(c.position, tset.box_size, tset.reference_hist, params, rng)
        tset.add(cloud, weight=0.0)
        added.append((c.object_id, tid))
    return added


def tracker_rng(seed: int, object_id: int, tracker_id: int) -> np.random.Generator:
    """Independent random substream for one tracker."""
    return np.random.default_rng([seed, 1, object_id, tracker_id])
