"""Frame sequences on disk, track CSV files and box overlays."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from sgtrack.appearance import Frame, pixel_bounds
from sgtrack.evaluation import TrackRecord
from sgtrack.geometry import BBox

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
TRACK_HEADER = ["frame", "id", "x", "y", "w", "h"]
_NUMBERED = re.compile(r"(\d+)$")

# stable per-object outline colours for overlays
PALETTE = np.array(
    [
        (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
        (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212),
        (0, 128, 128), (220, 190, 255), (170, 110, 40), (255, 250, 200), (128, 0, 0),
        (170, 255, 195), (128, 128, 0), (255, 215, 180), (0, 0, 128), (128, 128, 128),
    ],
    dtype=np.uint8,
)


class InputError(ValueError):
    """Unreadable or malformed input data."""


@dataclass
class FrameSequence:
    """Image paths in playback order; frames are decoded on access."""

    paths: list[Path]
    width: int
    height: int

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, index: int) -> Frame:
        path = self.paths[index]
        try:
            with Image.open(path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except (OSError, UnidentifiedImageError) as exc:
            raise InputError(f"frame {index} ({path}): cannot decode image: {exc}") from exc
        if pixels.shape[:2] != (self.height, self.width):
            raise InputError(
                f"frame {index} ({path}) is {pixels.shape[1]}x{pixels.shape[0]}, "
                f"expected {self.width}x{self.height}"
            )
        return Frame(pixels)

    def __iter__(self) -> Iterator[Frame]:
        for i in range(len(self)):
            yield self[i]


def _directory_listing(root: Path) -> list[Path]:
    numbered = []
    for p in root.iterdir():
        if p.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        m = _NUMBERED.search(p.stem)
        if m is None:
            raise InputError(f"{p}: image name does not end in a frame number")
        numbered.append((int(m.group(1)), p))
    numbered.sort()
    for (a, pa), (b, pb) in zip(numbered, numbered[1:]):
        if a == b:
            raise InputError(f"{pa.name} and {pb.name} share frame number {a}")
    return [p for _, p in numbered]


def _manifest_listing(manifest: Path) -> list[Path]:
    paths = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            p = Path(line)
            paths.append(p if p.is_absolute() else manifest.parent / p)
    return paths


def load_sequence(path: str | Path) -> FrameSequence:
    """Open a frame directory or a manifest (one image path per line).

    Image headers are read up front so mixed dimensions and unreadable files
    are reported before tracking starts.
    """
    path = Path(path)
    if path.is_dir():
        paths = _directory_listing(path)
    elif path.is_file():
        paths = _manifest_listing(path)
    else:
        raise InputError(f"{path}: no such frame directory or manifest")
    if not paths:
        raise InputError(f"{path}: no frames found")

    size = None
    for i, p in enumerate(paths):
        try:
            with Image.open(p) as img:
                this = img.size
        except (OSError, UnidentifiedImageError) as exc:
            raise InputError(f"frame {i} ({p}): cannot read image: {exc}") from exc
        if size is None:
            size = this
        elif this != size:
            raise InputError(f"frame {i} ({p}) is {this[0]}x{this[1]}, frame 0 is {size[0]}x{size[1]}")
    return FrameSequence(paths, size[0], size[1])


def write_frames(frames: Iterable[Frame | np.ndarray], directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for i, frame in enumerate(frames):
        pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.uint8)
        out = directory / f"frame_{i:06d}.png"
        Image.fromarray(pixels).save(out)
        written.append(out)
    return written


def _fmt(value: float, digits: int) -> str:
    text = f"{value:.{digits}f}"
    return "0." + "0" * digits if text == "-0." + "0" * digits else text


def format_tracks(records: Iterable[TrackRecord], with_confidence: bool | None = None) -> str:
    """Render records as CSV text, sorted by (frame, id); boxes as top-left corner + size."""
    records = sorted(records, key=lambda r: (r.frame, r.object_id))
    if with_confidence is None:
        with_confidence = any(r.confidence is not None for r in records)
    header = TRACK_HEADER + (["conf"] if with_confidence else [])
    lines = [",".join(header)]
    for r in records:
        x, y, w, h = r.box.corner()
        row = [str(r.frame), str(r.object_id), _fmt(x, 4), _fmt(y, 4), _fmt(w, 4), _fmt(h, 4)]
        if with_confidence:
            row.append("" if r.confidence is None else _fmt(r.confidence, 6))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_tracks(records: Iterable[TrackRecord], path: str | Path, with_confidence: bool | None = None) -> None:
    Path(path).write_text(format_tracks(records, with_confidence), encoding="utf-8", newline="\n")


def parse_tracks(text: str, source: str = "<tracks>") -> list[TrackRecord]:
    reader = csv.reader(text.splitlines())
    try:
        header = [c.strip().lower() for c in next(reader)]
    except StopIteration:
        raise InputError(f"{source}: empty file, expected header {','.join(TRACK_HEADER)}") from None
    if header not in (TRACK_HEADER, TRACK_HEADER + ["conf"]):
        raise InputError(f"{source}:1: expected header {','.join(TRACK_HEADER)}[,conf], got {','.join(header)}")
    has_conf = len(header) == 7

    records = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            frame, obj = int(row[0]), int(row[1])
            x, y, w, h = (float(v) for v in row[2:6])
            conf = float(row[6]) if has_conf and row[6].strip() else None
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from exc
        if frame < 0:
            raise InputError(f"{source}:{lineno}: negative frame number {frame}")
        if conf is not None and not 0.0 <= conf <= 1.0:
            raise InputError(f"{source}:{lineno}: confidence {conf} outside [0, 1]")
        if (frame, obj) in seen:
            raise InputError(f"{source}:{lineno}: duplicate record for frame {frame}, id {obj}")
        seen.add((frame, obj))
        try:
            box = BBox.from_corner(x, y, w, h)
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from exc
        records.append(TrackRecord(frame, obj, box, conf))
    return records


def read_tracks(path: str | Path) -> list[TrackRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_tracks(text, str(path))


def first_frame_boxes(records: Sequence[TrackRecord], source: str = "<annotations>") -> list[BBox]:
    """Initial boxes ordered by object id; ids must be 0..n-1 on the earliest frame."""
    if not records:
        raise InputError(f"{source}: no annotations")
    first = min(r.frame for r in records)
    boxes = {r.object_id: r.box for r in records if r.frame == first}
    if sorted(boxes) != list(range(len(boxes))):
        raise InputError(f"{source}: frame {first} must annotate ids 0..n-1, found {sorted(boxes)}")
    return [boxes[i] for i in range(len(boxes))]


def object_color(object_id: int) -> tuple[int, int, int]:
    return tuple(int(c) for c in PALETTE[object_id % len(PALETTE)])


def draw_boxes(pixels: np.ndarray, boxes: dict[int, BBox], thickness: int = 2) -> np.ndarray:
    """Copy of ``pixels`` with each box outlined in its object's colour."""
    out = np.array(pixels, dtype=np.uint8, copy=True)
    height, width = out.shape[:2]
    for obj in sorted(boxes):
        box = boxes[obj]
        x0, y0, x1, y1 = pixel_bounds(np.array([[box.cx, box.cy]]), (box.width, box.height), width, height)[0]
        if x1 <= x0 or y1 <= y0:
            continue
        t = min(thickness, x1 - x0, y1 - y0)
        color = object_color(obj)
        out[y0 : y0 + t, x0:x1] = color
        out[y1 - t : y1, x0:x1] = color
        out[y0:y1, x0 : x0 + t] = color
        out[y0:y1, x1 - t : x1] = color
    return out


def render_overlays(frames: Iterable[Frame], records: Iterable[TrackRecord]) -> Iterator[np.ndarray]:
    by_frame: dict[int, dict[int, BBox]] = {}
    for r in records:
        by_frame.setdefault(r.frame, {})[r.object_id] = r.box
    for t, frame in enumerate(frames):
        yield draw_boxes(frame.pixels, by_frame.get(t, {}))
