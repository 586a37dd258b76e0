"""Command line: ``sgtrack [--config F] [--seed N] [--out DIR] <command> ...``.

Exit codes: 0 success, 1 input error, 2 config error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from sgtrack.config import ConfigError, RunConfig, format_config, load_config
from sgtrack.evaluation import MetricsError, compute_metrics
from sgtrack.fileio import (
    InputError,
    first_frame_boxes,
    load_sequence,
    read_tracks,
    render_overlays,
    write_frames,
    write_tracks,
)
from sgtrack.simulate import ScenarioError, generate, standard_suite
from sgtrack.sweep import format_marginals, format_rows, marginal_means, run_sweep, weight_grid
from sgtrack.tracker import GraphTracker

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("sgtrack")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; the subcommand copy only
    # overrides when given
    p = argparse.ArgumentParser(add_help=False)
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", type=Path, default=default, help="flat key = value config file")
    p.add_argument("--seed", type=int, default=default, help="master seed (overrides run.seed)")
    p.add_argument("--out", type=Path, default=argparse.SUPPRESS if suppress else Path("."), help="output directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgtrack", description="Structure-aware multi-object tracking", parents=[_global_flags(False)])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags(True)]

    p = sub.add_parser("track", parents=common, help="track objects annotated on the first frame")
    p.add_argument("frames", type=Path, help="frame directory or manifest")
    p.add_argument("annotations", type=Path, help="CSV whose earliest frame holds the initial boxes")
    p.add_argument("--overlay", action="store_true", help="also write frames with the tracked boxes drawn")

    p = sub.add_parser("evaluate", parents=common, help="CLEAR-MOT metrics of a track file against ground truth")
    p.add_argument("gt", type=Path)
    p.add_argument("hyp", type=Path)
    p.add_argument("--iou-threshold", type=float, default=None)

    p = sub.add_parser("simulate", parents=common, help="render a synthetic scenario with ground truth")
    p.add_argument("scenario", choices=sorted(standard_suite()))
    p.add_argument("--frames", type=int, default=None, help="truncate to this many frames")

    p = sub.add_parser("sweep", parents=common, help="grid search over the graph score weights")
    p.add_argument("frames", type=Path)
    p.add_argument("gt", type=Path, help="ground truth CSV; its earliest frame initialises the tracker")
    p.add_argument("--step", type=float, default=0.2)
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("overlay", parents=common, help="draw a track file onto its frames")
    p.add_argument("frames", type=Path)
    p.add_argument("tracks", type=Path)
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config is not None else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_track(args, cfg: RunConfig) -> None:
    seq = load_sequence(args.frames)
    boxes = first_frame_boxes(read_tracks(args.annotations), str(args.annotations))
    out = args.out / "tracks.csv"
    # validates topology before any frame is decoded
    cfg.validate(n_objects=len(boxes))
    frames = iter(seq)
    tracker = GraphTracker(cfg, next(frames), boxes)
    records = list(tracker.initial_records)
    try:
        for frame in frames:
            records.extend(tracker.step(frame)[1])
    finally:
        # flush whatever was tracked, even if a frame failed
        write_tracks(records, out, with_confidence=True)
    log.info("wrote %d records to %s", len(records), out)
    if args.overlay:
        write_frames(render_overlays(seq, records), args.out / "overlay")


def cmd_evaluate(args, cfg: RunConfig) -> None:
    threshold = args.iou_threshold if args.iou_threshold is not None else cfg.iou_threshold
    report = compute_metrics(read_tracks(args.gt), read_tracks(args.hyp), threshold)
    text = report.to_text()
    (args.out / "metrics.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_simulate(args, cfg: RunConfig) -> None:
    scenario = standard_suite()[args.scenario]
    if args.frames is not None and args.frames < 1:
        raise ConfigError("--frames must be positive")
    seq = generate(scenario, cfg.seed)
    if args.frames is not None:
        # slice rather than regenerate so the prefix matches the full scene
        n = args.frames
        seq = replace(
            seq,
            frames=seq.frames[:n],
            ground_truth=[r for r in seq.ground_truth if r.frame < n],
            events=[e for e in seq.events if e[0] < n],
            positions=seq.positions[:n],
        )
    write_frames(seq.frames, args.out / "frames")
    write_tracks(seq.ground_truth, args.out / "gt.csv", with_confidence=False)
    lines = ["frame,event"] + [f"{t},{name}" for t, name in seq.events]
    (args.out / "events.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    # topology the tracker needs for this scene, ready for --config
    topo = cfg.with_topology(scenario.adjacency, scenario.candidates)
    (args.out / "scenario.cfg").write_text(format_config(topo), encoding="utf-8")


def cmd_sweep(args, cfg: RunConfig) -> None:
    seq = load_sequence(args.frames)
    gt = read_tracks(args.gt)
    boxes = first_frame_boxes(gt, str(args.gt))
    cfg.validate(n_objects=len(boxes))
    frames = list(seq)
    rows = run_sweep(
        cfg, frames, boxes, gt, weight_grid(args.step), repeats=args.repeats,
        progress=lambda n, r: log.info("cell %d: %.2f %.2f %.2f -> MOTG %.4f", n, r.rho_a, r.rho_s, r.rho_o, r.motg),
    )
    (args.out / "sweep.csv").write_text(format_rows(rows), encoding="utf-8")
    (args.out / "marginals.csv").write_text(format_marginals(marginal_means(rows)), encoding="utf-8")


def cmd_overlay(args, cfg: RunConfig) -> None:
    seq = load_sequence(args.frames)
    write_frames(render_overlays(seq, read_tracks(args.tracks)), args.out / "overlay")


COMMANDS = {
    "track": cmd_track,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "overlay": cmd_overlay,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, cfg)
    except (ConfigError, ScenarioError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (InputError, MetricsError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - anything else is a failed run
        log.error("runtime failure: %s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
