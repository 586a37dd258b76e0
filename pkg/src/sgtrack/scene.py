"""Tracker sets and scene-graph scoring.

A scene graph picks one tracker per object. Its score is the sum over
objects of ``rho_T * w + f`` where ``w`` is the picked tracker's stored
temporal weight and ``f`` its instantaneous score::

    f = rho_A * appearance + rho_S * structure - rho_O * overlap - rho_C * change

Every term of ``f`` depends on at most two objects' choices, so a scene is
scored from per-object tables plus directed pairwise tables
(:class:`PairwiseScorer`), which lets the optimiser evaluate a single-object
move without recomputing the whole sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from sgtrack.appearance import Frame, bhattacharyya_many
from sgtrack.geometry import BBox, Point2, extents, overlap_ratio, overlap_ratio_matrix
from sgtrack.particle_filter import ParticleCloud, confidence, estimate_state
from sgtrack.structural import ModelGraph


@dataclass
class ScoreWeights:
    rho_a: float = 0.4
    rho_s: float = 0.0
    rho_o: float = 0.6
    rho_t: float = 0.8

    @property
    def rho_c(self) -> float:
        return max(0.0, 1.0 - self.rho_a - self.rho_s - self.rho_o)

    def validate(self) -> None:
        for name in ("rho_a", "rho_s", "rho_o"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.rho_a + self.rho_s + self.rho_o > 1.0 + 1e-9:
            raise ValueError("rho_a + rho_s + rho_o must not exceed 1")
        if not 0.0 <= self.rho_t < 1.0:
            raise ValueError("rho_t must lie in [0, 1)")


@dataclass
class TrackerEntry:
    tracker_id: int
    cloud: ParticleCloud
    weight: float = 0.0
    # refreshed every frame once the cloud has been reweighted
    position: Point2 | None = None
    scene_hist: np.ndarray | None = None
    zeta: float = 0.0

    def refresh(self, hist: np.ndarray) -> None:
        self.position = estimate_state(self.cloud)
        self.scene_hist = hist
        self.zeta = confidence(self.cloud)

    @property
    def box(self) -> BBox:
        return BBox.at(self.position, self.cloud.box_size)


@dataclass
class TrackerSet:
    object_id: int
    box_size: tuple[float, float]
    reference_hist: np.ndarray
    entries: list[TrackerEntry] = field(default_factory=list)
    next_id: int = 0

    def add(self, cloud: ParticleCloud, weight: float = 0.0) -> TrackerEntry:
        entry = TrackerEntry(self.next_id, cloud, weight)
        self.next_id += 1
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self, tracker_id: int) -> int | None:
        for n, e in enumerate(self.entries):
            if e.tracker_id == tracker_id:
                return n
        return None

    def best_index(self) -> int:
        """Index of the tracker with the highest temporal weight (oldest wins ties)."""
        weights = [e.weight for e in self.entries]
        return int(np.argmax(weights))

    def best(self) -> TrackerEntry:
        return self.entries[self.best_index()]

    def refresh(self, frame: Frame) -> None:
        """Cache estimate, scene histogram and confidence of every tracker."""
        centers = np.array([list(estimate_state(e.cloud)) for e in self.entries])
        hists, _ = frame.histograms(centers, self.box_size)
        for e, h in zip(self.entries, hists):
            e.refresh(h)


# --- individual score terms -------------------------------------------------


def appearance_score(cloud: ParticleCloud) -> float:
    return confidence(cloud)


def structural_score(i: int, positions: Sequence[Point2], model: ModelGraph) -> float:
    """Mean over i's outgoing edges of the averaged angle and distance likelihoods."""
    targets = np.flatnonzero(model.adjacency[i])
    if len(targets) == 0:
        return 0.0
    total = 0.0
    for j in targets:
        l_theta, l_d = model.edge_likelihoods(i, int(j), positions[i], positions[j])
        total += (l_theta + l_d) / 2.0
    return total / len(targets)


def overlap_score(i: int, boxes: Sequence[BBox], hists: Sequence[np.ndarray]) -> float:
    """Overlap of box i with every other box, weighted by appearance similarity."""
    total = 0.0
    for j in range(len(boxes)):
        if j == i:
            continue
        ratio = overlap_ratio(boxes[i], boxes[j])
        if ratio > 0:
            similarity = 1.0 - float(bhattacharyya_many(hists[i], hists[j][None, :])[0])
            total += similarity * ratio
    return total


def change_score(chosen_id: int, previous_id: int | None) -> float:
    if previous_id is None:
        return 0.0
    return 0.0 if chosen_id == previous_id else 1.0


def instantaneous_score(phi_a: float, phi_s: float, phi_o: float, phi_c: float, weights: ScoreWeights) -> float:
    return weights.rho_a * phi_a + weights.rho_s * phi_s - weights.rho_o * phi_o - weights.rho_c * phi_c


@dataclass
class ObjectScores:
    phi_a: float
    phi_s: float
    phi_o: float
    phi_c: float
    f: float


def object_scores(
    i: int,
    choice: Sequence[int],
    tracker_sets: Sequence[TrackerSet],
    model: ModelGraph,
    weights: ScoreWeights,
    previous_ids: Sequence[int | None],
) -> ObjectScores:
    """All score terms of object i when each object o uses ``entries[choice[o]]``."""
    chosen = [ts.entries[c] for ts, c in zip(tracker_sets, choice)]
    phi_a = chosen[i].zeta
    phi_s = structural_score(i, [e.position for e in chosen], model) if weights.rho_s > 0 else 0.0
    phi_o = overlap_score(i, [e.box for e in chosen], [e.scene_hist for e in chosen])
    phi_c = change_score(chosen[i].tracker_id, previous_ids[i])
    return ObjectScores(phi_a, phi_s, phi_o, phi_c, instantaneous_score(phi_a, phi_s, phi_o, phi_c, weights))


def graph_score(
    choice: Sequence[int],
    tracker_sets: Sequence[TrackerSet],
    model: ModelGraph,
    weights: ScoreWeights,
    previous_ids: Sequence[int | None],
) -> float:
    """Sum over objects of rho_T * (stored weight) + f, computed term by term.

    Stored weights are read, never written.
    """
    total = 0.0
    for i, ts in enumerate(tracker_sets):
        f = object_scores(i, choice, tracker_sets, model, weights, previous_ids).f
        total += weights.rho_t * ts.entries[choice[i]].weight + f
    return total


# --- decomposed scorer used by the optimiser --------------------------------


class PairwiseScorer:
    """Scene score as per-object tables plus directed pairwise tables.

    ``carry[i][k]`` is the temporal carry-over of option k of object i,
    ``base[i][k]`` the part of its instantaneous score that ignores other
    objects, and ``pair[i, j][k, l]`` the part of object i's instantaneous
    score contributed by object j when i uses k and j uses l.
    """

    def __init__(self, carry, base, pair):
        self.carry = [np.asarray(c, dtype=float) for c in carry]
        self.base = [np.asarray(b, dtype=float) for b in base]
        self.pair = {key: np.asarray(v, dtype=float) for key, v in pair.items()}
        self.n_objects = len(self.base)
        # both directions folded in: what changes when object i switches option
        self._joint: dict[int, list[tuple[int, np.ndarray]]] = {i: [] for i in range(self.n_objects)}
        for i in range(self.n_objects):
            for j in range(self.n_objects):
                if i == j:
                    continue
                m = np.zeros((len(self.base[i]), len(self.base[j])))
                if (i, j) in self.pair:
                    m += self.pair[i, j]
                if (j, i) in self.pair:
                    m += self.pair[j, i].T
                if m.any():
                    self._joint[i].append((j, m))

    def n_options(self, i: int) -> int:
        return len(self.base[i])

    def instantaneous(self, choice: Sequence[int], i: int) -> np.ndarray:
        """f of every option of object i with the other objects fixed at ``choice``."""
        f = self.base[i].copy()
        for j in range(self.n_objects):
            if j != i and (i, j) in self.pair:
                f += self.pair[i, j][:, choice[j]]
        return f

    def option_scores(self, choice: Sequence[int], i: int) -> np.ndarray:
        """Score change terms for each option of object i, others fixed.

        Differences between entries equal differences in :meth:`total`.
        """
        s = self.carry[i] + self.base[i]
        for j, m in self._joint[i]:
            s = s + m[:, choice[j]]
        return s

    def total(self, choice: Sequence[int]) -> float:
        total = 0.0
        for i in range(self.n_objects):
            k = choice[i]
            total += self.carry[i][k] + self.base[i][k]
        for (i, j), m in self.pair.items():
            total += m[choice[i], choice[j]]
        return float(total)


def build_scorer(
    tracker_sets: Sequence[TrackerSet],
    model: ModelGraph,
    weights: ScoreWeights,
    previous_ids: Sequence[int | None],
) -> PairwiseScorer:
    n = len(tracker_sets)
    carry, base = [], []
    for i, ts in enumerate(tracker_sets):
        carry.append([weights.rho_t * e.weight for e in ts.entries])
        base.append(
            [
                weights.rho_a * e.zeta - weights.rho_c * change_score(e.tracker_id, previous_ids[i])
                for e in ts.entries
            ]
        )

    ext = [extents(np.array([list(e.position) for e in ts.entries]), ts.box_size) for ts in tracker_sets]
    sqrt_hists = [np.sqrt(np.array([e.scene_hist for e in ts.entries])) for ts in tracker_sets]
    pair = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            m = np.zeros((len(tracker_sets[i]), len(tracker_sets[j])))
            if weights.rho_o > 0:
                ratio = overlap_ratio_matrix(ext[i], ext[j])
                if ratio.any():
                    coeff = np.clip(sqrt_hists[i] @ sqrt_hists[j].T, 0.0, 1.0)
                    similarity = 1.0 - np.sqrt(1.0 - coeff)
                    m -= weights.rho_o * similarity * ratio
            if weights.rho_s > 0 and model.adjacency[i, j]:
                scale = weights.rho_s / (2.0 * model.out_degree(i))
                for k, ek in enumerate(tracker_sets[i].entries):
                    for l, el in enumerate(tracker_sets[j].entries):
                        l_theta, l_d = model.edge_likelihoods(i, j, ek.position, el.position)
                        m[k, l] += scale * (l_theta + l_d)
            if m.any():
                pair[i, j] = m
    return PairwiseScorer(carry, base, pair)
