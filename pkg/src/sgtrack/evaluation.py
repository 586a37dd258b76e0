"""CLEAR-MOT evaluation: MOTP, MOTA, MOTG, identity switches and TP/FP rates.

Matching follows the usual CLEAR-MOT protocol. Correspondences from the
previous frame are kept while their IoU stays above the threshold, the rest
are resolved by a maximum-total-IoU assignment. The per-match "distance"
is the IoU itself, so MOTP is a mean overlap (higher is better).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from sgtrack.geometry import BBox, iou


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class TrackRecord:
    frame: int
    object_id: int
    box: BBox
    confidence: float | None = None


@dataclass
class FrameMatch:
    correspondence: dict[int, int]  # gt id -> hypothesis id
    misses: int
    false_positives: int
    mismatches: int
    matches: int
    overlap_sum: float


@dataclass
class MetricsReport:
    motp: float
    mota: float
    motg: float
    idsw: int
    misses: int
    false_positives: int
    mismatches: int
    matches: int
    ground_truth: int
    tp_rate: float
    fp_rate: float
    motp_defined: bool = True
    per_frame: list[FrameMatch] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict[str, float | int | bool]:
        return {
            "MOTP": self.motp,
            "MOTA": self.mota,
            "MOTG": self.motg,
            "IDSW": self.idsw,
            "TPrate": self.tp_rate,
            "FPrate": self.fp_rate,
            "misses": self.misses,
            "false_positives": self.false_positives,
            "mismatches": self.mismatches,
            "matches": self.matches,
            "ground_truth": self.ground_truth,
            "motp_defined": self.motp_defined,
        }

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def match_frame(
    gt: Mapping[int, BBox],
    hyp: Mapping[int, BBox],
    previous: Mapping[int, int],
    iou_threshold: float = 0.5,
) -> FrameMatch:
    """Match one frame.

    ``previous`` maps each ground-truth id to the hypothesis id it was last
    matched with (in any earlier frame); a different partner now counts as a
    mismatch.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError("iou_threshold must lie in (0, 1]")
    corr: dict[int, int] = {}
    overlaps: dict[int, float] = {}
    for g, h in previous.items():
        if g in gt and h in hyp and h not in corr.values():
            o = iou(gt[g], hyp[h])
            if o >= iou_threshold:
                corr[g] = h
                overlaps[g] = o

    free_gt = sorted(g for g in gt if g not in corr)
    taken = set(corr.values())
    free_hyp = sorted(h for h in hyp if h not in taken)
    if free_gt and free_hyp:
        m = np.array([[iou(gt[g], hyp[h]) for h in free_hyp] for g in free_gt])
        valid = m >= iou_threshold
        # pairs below the gate get a prohibitive cost and are dropped afterwards
        cost = np.where(valid, -m, 1.0)
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            if valid[r, c]:
                corr[free_gt[r]] = free_hyp[c]
                overlaps[free_gt[r]] = float(m[r, c])

    mismatches = sum(1 for g, h in corr.items() if g in previous and previous[g] != h)
    return FrameMatch(
        correspondence=corr,
        misses=len(gt) - len(corr),
        false_positives=len(hyp) - len(corr),
        mismatches=mismatches,
        matches=len(corr),
        overlap_sum=float(sum(overlaps.values())),
    )


def _index(records: Iterable[TrackRecord], label: str) -> dict[int, dict[int, BBox]]:
    frames: dict[int, dict[int, BBox]] = {}
    for r in records:
        per = frames.setdefault(r.frame, {})
        if r.object_id in per:
            raise MetricsError(f"{label}: duplicate record for frame {r.frame}, object {r.object_id}")
        per[r.object_id] = r.box
    return frames


def compute_metrics(
    gt_records: Sequence[TrackRecord],
    hyp_records: Sequence[TrackRecord],
    iou_threshold: float = 0.5,
) -> MetricsReport:
    gt = _index(gt_records, "ground truth")
    hyp = _index(hyp_records, "hypotheses")
    last_match: dict[int, int] = {}
    prev_corr: dict[int, int] = {}
    idsw = 0
    totals = dict(m=0, fp=0, mme=0, c=0, g=0, d=0.0)
    per_frame = []
    for t in sorted(set(gt) | set(hyp)):
        fm = match_frame(gt.get(t, {}), hyp.get(t, {}), last_match, iou_threshold)
        per_frame.append(fm)
        last_match.update(fm.correspondence)
        idsw += sum(1 for g, h in fm.correspondence.items() if g in prev_corr and prev_corr[g] != h)
        prev_corr = fm.correspondence
        totals["m"] += fm.misses
        totals["fp"] += fm.false_positives
        totals["mme"] += fm.mismatches
        totals["c"] += fm.matches
        totals["g"] += len(gt.get(t, {}))
        totals["d"] += fm.overlap_sum
    g = totals["g"]
    if g == 0:
        raise MetricsError("ground truth contains no objects; metrics are undefined")
    motp_defined = totals["c"] > 0
    motp = totals["d"] / totals["c"] if motp_defined else 0.0
    mota = 1.0 - (totals["m"] + totals["fp"] + totals["mme"]) / g
    return MetricsReport(
        motp=motp,
        mota=mota,
        motg=(motp + mota) / 2.0,
        idsw=idsw,
        misses=totals["m"],
        false_positives=totals["fp"],
        mismatches=totals["mme"],
        matches=totals["c"],
        ground_truth=g,
        tp_rate=totals["c"] / g,
        fp_rate=totals["fp"] / g,
        motp_defined=motp_defined,
        per_frame=per_frame,
    )
