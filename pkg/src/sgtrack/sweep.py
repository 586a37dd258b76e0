"""Grid search over the three graph score weights."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from sgtrack.appearance import Frame
from sgtrack.config import RunConfig
from sgtrack.evaluation import TrackRecord, compute_metrics
from sgtrack.geometry import BBox
from sgtrack.tracker import track_sequence

log = logging.getLogger(__name__)

PARAMS = ("rho_a", "rho_s", "rho_o")


def weight_grid(step: float | Fraction = Fraction(1, 5)) -> list[tuple[float, float, float]]:
    """Every (rho_a, rho_s, rho_o) on a ``step`` lattice of [0, 1] with a sum of at most 1.

    The lattice is enumerated in exact arithmetic, so step 0.2 gives the 6**3
    grid minus the triples that sum past 1.
    """
    step = Fraction(step).limit_denominator(1000)
    if not 0 < step <= 1:
        raise ValueError("step must lie in (0, 1]")
    n = int(1 / step)
    values = [k * step for k in range(n + 1)]
    grid = []
    skipped = 0
    for a in values:
        for s in values:
            for o in values:
                if a + s + o > 1:
                    skipped += 1
                    continue
                grid.append((float(a), float(s), float(o)))
    if skipped:
        log.warning("ignoring %d weight triples whose sum exceeds 1", skipped)
    return grid


def cell_seed(master: int, repeat: int) -> int:
    """Seed for one repeat; shared by every cell so cells differ only in their weights."""
    return int(np.random.SeedSequence([master, 11, repeat]).generate_state(1)[0])


@dataclass
class SweepRow:
    rho_a: float
    rho_s: float
    rho_o: float
    motp: float
    mota: float
    motg: float


def run_sweep(
    config: RunConfig,
    frames: Sequence[Frame],
    boxes: Sequence[BBox],
    ground_truth: Sequence[TrackRecord],
    grid: Iterable[tuple[float, float, float]],
    repeats: int = 1,
    progress: Callable[[int, SweepRow], None] | None = None,
) -> list[SweepRow]:
    """Track once per (weights, repeat) and average CLEAR-MOT scores over repeats."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rows = []
    for n, (a, s, o) in enumerate(grid):
        weights = replace(config.weights, rho_a=a, rho_s=s, rho_o=o)
        try:
            weights.validate()
        except ValueError as exc:
            log.warning("skipping weights (%s, %s, %s): %s", a, s, o, exc)
            continue
        scores = []
        for r in range(repeats):
            cfg = replace(config, weights=weights, seed=cell_seed(config.seed, r))
            hyp = track_sequence(cfg, frames, boxes)
            m = compute_metrics(ground_truth, hyp, config.iou_threshold)
            scores.append((m.motp, m.mota, m.motg))
        motp, mota, motg = np.mean(scores, axis=0)
        row = SweepRow(a, s, o, float(motp), float(mota), float(motg))
        rows.append(row)
        if progress is not None:
            progress(n, row)
    return rows


def marginal_means(rows: Sequence[SweepRow], metric: str = "motg") -> list[tuple[str, float, float, int]]:
    """Mean of ``metric`` for each (parameter, value): one curve per weight."""
    out = []
    for p in PARAMS:
        groups: dict[float, list[float]] = {}
        for row in rows:
            groups.setdefault(getattr(row, p), []).append(getattr(row, metric))
        for value in sorted(groups):
            out.append((p, value, float(np.mean(groups[value])), len(groups[value])))
    return out


def format_rows(rows: Sequence[SweepRow]) -> str:
    lines = ["rho_a,rho_s,rho_o,motp,mota,motg"]
    for r in rows:
        lines.append(f"{r.rho_a:.2f},{r.rho_s:.2f},{r.rho_o:.2f},{r.motp:.6f},{r.mota:.6f},{r.motg:.6f}")
    return "\n".join(lines) + "\n"


def format_marginals(marginals: Sequence[tuple[str, float, float, int]]) -> str:
    lines = ["parameter,value,mean_motg,cells"]
    for p, v, m, n in marginals:
        lines.append(f"{p},{v:.2f},{m:.6f},{n}")
    return "\n".join(lines) + "\n"
