"""Per-frame pipeline tying particle filters to the structural graph model."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sgtrack.appearance import Frame, bhattacharyya_many, likelihood_from_distance
from sgtrack.candidates import filter_candidates, sample_candidates, spawn_trackers, tracker_rng
from sgtrack.config import ConfigError, RunConfig
from sgtrack.evaluation import TrackRecord
from sgtrack.geometry import BBox, Point2, extents
from sgtrack.optimize import OptimizationResult, greedy_optimize
from sgtrack.particle_filter import advance, init_cloud
from sgtrack.scene import ObjectScores, PairwiseScorer, TrackerSet, build_scorer, object_scores
from sgtrack.structural import ModelGraph, init_model, update_model

log = logging.getLogger(__name__)


@dataclass
class SceneSelection:
    tracker_ids: list[int]
    positions: list[Point2]
    scores: list[ObjectScores]
    graph_score: float


def _stream(seed: int, purpose: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, purpose, frame_index])


def commit_frame(
    tracker_sets: Sequence[TrackerSet],
    choice: Sequence[int],
    scorer: PairwiseScorer,
    rho_t: float,
    tau_r: float,
) -> None:
    """Fold each tracker's instantaneous score into its temporal weight, then prune.

    Every tracker is scored as if it replaced its object's pick while all
    other objects stay at ``choice``. A tracker whose weight falls below
    ``tau_r`` is dropped unless that would empty its set, in which case the
    best-weighted one stays.
    """
    for i, ts in enumerate(tracker_sets):
        f = scorer.instantaneous(choice, i)
        for entry, fk in zip(ts.entries, f):
            entry.weight = rho_t * entry.weight + float(fk)
    for ts in tracker_sets:
        kept = [e for e in ts.entries if e.weight >= tau_r]
        if not kept:
            kept = [ts.best()]
        ts.entries = kept


class GraphTracker:
    """Tracks a fixed set of objects annotated on the first frame."""

    def __init__(self, config: RunConfig, first_frame: Frame, boxes: Sequence[BBox]):
        n = len(boxes)
        if config.adjacency is None or config.candidates is None:
            raise ConfigError("topology.adjacency and topology.candidates must be configured")
        self.config = config.validate(n_objects=n)
        self.width = first_frame.width
        self.height = first_frame.height
        self.model: ModelGraph = init_model(
            boxes,
            first_frame,
            config.adjacency,
            theta_bins=config.theta_bins,
            dist_bins=config.dist_bins,
            dist_range=config.dist_range,
            kernels=config.kernels,
        )
        self.candidate_matrix = np.asarray(config.candidates, dtype=np.int64)
        self.tracker_sets: list[TrackerSet] = []
        for i, box in enumerate(boxes):
            ts = TrackerSet(i, (box.width, box.height), self.model.vertex_hists[i])
            cloud = init_cloud(box.center, ts.box_size, ts.reference_hist, config.pf, tracker_rng(config.seed, i, 0))
            ts.add(cloud, weight=0.0)
            ts.refresh(first_frame)
            self.tracker_sets.append(ts)
        self.previous_ids: list[int | None] = [0] * n
        self.frame_index = 0
        self.initial_records = [TrackRecord(0, i, b, 1.0) for i, b in enumerate(boxes)]
        self.last_optimization: OptimizationResult | None = None

    @property
    def n_objects(self) -> int:
        return len(self.tracker_sets)

    def reference_positions(self) -> list[Point2]:
        """Positions of each object's highest-weighted tracker, from the last committed frame."""
        return [ts.best().position for ts in self.tracker_sets]

    def _spawn_candidates(self, frame: Frame) -> int:
        cfg = self.config
        if not self.candidate_matrix.any():
            return 0
        rng = _stream(cfg.seed, 2, self.frame_index)
        cands = sample_candidates(
            self.model,
            self.reference_positions(),
            self.candidate_matrix,
            (cfg.sigma_theta, cfg.sigma_d),
            self.model.image_width,
            rng,
        )
        existing = np.vstack(
            [extents(np.array([list(e.position) for e in ts.entries]), ts.box_size) for ts in self.tracker_sets]
        )
        survivors = filter_candidates(
            cands,
            existing,
            frame,
            self.model.vertex_hists,
            [ts.box_size for ts in self.tracker_sets],
            cfg.tau_o,
            cfg.tau_s,
            cfg.pf.sigma_b,
        )
        spawn_trackers(survivors, self.tracker_sets, cfg.pf, cfg.seed)
        return len(survivors)

    def _guided_start(self) -> tuple[list[int], list[int]]:
        init = []
        for ts, prev in zip(self.tracker_sets, self.previous_ids):
            idx = ts.index_of(prev) if prev is not None else None
            init.append(ts.best_index() if idx is None else idx)
        best_w = [ts.best().weight for ts in self.tracker_sets]
        order = sorted(range(self.n_objects), key=lambda i: (best_w[i], i))
        return init, order

    def step(self, frame: Frame) -> tuple[SceneSelection, list[TrackRecord]]:
        if frame.width != self.width or frame.height != self.height:
            raise ValueError(
                f"frame is {frame.width}x{frame.height}, sequence started at {self.width}x{self.height}"
            )
        cfg = self.config
        self.frame_index += 1
        self._spawn_candidates(frame)

        for ts in self.tracker_sets:
            for entry in ts.entries:
                advance(entry.cloud, frame, cfg.pf)
            ts.refresh(frame)

        scorer = build_scorer(self.tracker_sets, self.model, cfg.weights, self.previous_ids)
        init, order = self._guided_start()
        result = greedy_optimize(scorer, init, order, cfg.tau_i, cfg.n_ri, _stream(cfg.seed, 3, self.frame_index))
        self.last_optimization = result
        choice = result.choice

        chosen = [ts.entries[c] for ts, c in zip(self.tracker_sets, choice)]
        scores = [
            object_scores(i, choice, self.tracker_sets, self.model, cfg.weights, self.previous_ids)
            for i in range(self.n_objects)
        ]
        selection = SceneSelection(
            tracker_ids=[e.tracker_id for e in chosen],
            positions=[e.position for e in chosen],
            scores=scores,
            graph_score=result.score,
        )
        confidences = [
            float(likelihood_from_distance(bhattacharyya_many(ts.reference_hist, e.scene_hist[None, :])[0], cfg.pf.sigma_b))
            for ts, e in zip(self.tracker_sets, chosen)
        ]
        records = [
            TrackRecord(self.frame_index, i, BBox.at(e.position, e.cloud.box_size), e.zeta)
            for i, e in enumerate(chosen)
        ]

        commit_frame(self.tracker_sets, choice, scorer, cfg.weights.rho_t, cfg.tau_r)
        update_model(self.model, selection.positions, confidences, cfg.kernels)
        self.previous_ids = selection.tracker_ids
        return selection, records


def track_sequence(config: RunConfig, frames, boxes: Sequence[BBox]) -> list[TrackRecord]:
    """Run the tracker over an iterable of frames; the first frame carries ``boxes``."""
    it = iter(frames)
    first = next(it)
    tracker = GraphTracker(config, first, boxes)
    records = list(tracker.initial_records)
    for frame in it:
        records.extend(tracker.step(frame)[1])
    return records
