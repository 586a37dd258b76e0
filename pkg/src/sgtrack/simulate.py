"""Synthetic structured scenes: flat-coloured boxes over a plain or noisy background.

Objects follow piecewise-linear waypoint paths with Gaussian jitter. Two
kinds of scripted events perturb them: an occlusion pulls one object onto
another for a frame interval, and a camera cut translates the whole scene
at once. Objects are painted in id order, so higher ids cover lower ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sgtrack.appearance import Frame, pixel_bounds
from sgtrack.evaluation import TrackRecord
from sgtrack.geometry import BBox, iou

RED = (210, 40, 40)
BLUE = (40, 60, 210)
YELLOW = (235, 205, 40)
WHITE = (255, 255, 255)
GREEN = (40, 140, 60)


class ScenarioError(ValueError):
    pass


@dataclass
class ObjectSpec:
    object_id: int
    size: tuple[float, float]
    color: tuple[int, int, int]
    # (frame, x, y) waypoints; the path is linear between them and constant beyond
    waypoints: list[tuple[float, float, float]]
    team: str | None = None
    jitter: float = 0.0


@dataclass
class OcclusionEvent:
    """Drag ``mover`` onto ``anchor`` (plus ``offset``) during [start, end]."""

    anchor: int
    mover: int
    start: int
    end: int
    offset: tuple[float, float] = (3.0, 2.0)
    ramp: int = 8


@dataclass
class CutEvent:
    frame: int
    shift: tuple[float, float]


@dataclass
class ScenarioConfig:
    name: str
    width: int
    height: int
    objects: list[ObjectSpec]
    n_frames: int
    occlusions: list[OcclusionEvent] = field(default_factory=list)
    cuts: list[CutEvent] = field(default_factory=list)
    background: tuple[int, int, int] = GREEN
    # amplitude of grey value noise added to the background; 0 keeps it flat
    background_noise: float = 0.0
    noise_cell: int = 8
    adjacency: list[list[int]] | None = None
    candidates: list[list[int]] | None = None

    def validate(self) -> None:
        ids = [o.object_id for o in self.objects]
        if ids != list(range(len(ids))):
            raise ScenarioError("object ids must be 0..n-1 in order")
        if self.width <= 0 or self.height <= 0 or self.n_frames < 1:
            raise ScenarioError("image size and frame count must be positive")
        for o in self.objects:
            if o.size[0] <= 0 or o.size[1] <= 0:
                raise ScenarioError(f"object {o.object_id} has a non-positive size")
            if o.size[0] > self.width or o.size[1] > self.height:
                raise ScenarioError(f"object {o.object_id} is larger than the frame")
            if not o.waypoints:
                raise ScenarioError(f"object {o.object_id} has no waypoints")
        for ev in self.occlusions:
            if ev.anchor not in ids or ev.mover not in ids or ev.anchor == ev.mover:
                raise ScenarioError(f"occlusion event {ev} references unknown objects")
            if not 0 <= ev.start <= ev.end < self.n_frames:
                raise ScenarioError(f"occlusion event {ev} lies outside the sequence")
        for ev in self.cuts:
            if not 0 < ev.frame < self.n_frames:
                raise ScenarioError(f"cut event {ev} lies outside the sequence")


@dataclass
class SyntheticSequence:
    config: ScenarioConfig
    frames: list[Frame]
    ground_truth: list[TrackRecord]
    events: list[tuple[int, str]]
    positions: np.ndarray  # (n_frames, n_objects, 2) box centres

    def annotations(self) -> list[BBox]:
        return [r.box for r in self.ground_truth if r.frame == 0]

    def boxes_at(self, t: int) -> list[BBox]:
        return [_box(self.positions[t, i], o.size) for i, o in enumerate(self.config.objects)]


def _box(center, size) -> BBox:
    return BBox(float(center[0]), float(center[1]), float(size[0]), float(size[1]))


def _paths(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(config.n_frames)
    n = len(config.objects)
    pos = np.zeros((config.n_frames, n, 2))
    for o in config.objects:
        wp = np.array(sorted(o.waypoints), dtype=float)
        pos[:, o.object_id, 0] = np.interp(t, wp[:, 0], wp[:, 1])
        pos[:, o.object_id, 1] = np.interp(t, wp[:, 0], wp[:, 2])
        if o.jitter > 0:
            pos[:, o.object_id] += o.jitter * rng.standard_normal((config.n_frames, 2))

    for ev in config.occlusions:
        target = pos[:, ev.anchor] + np.asarray(ev.offset)
        for f in range(max(0, ev.start - ev.ramp), min(config.n_frames, ev.end + ev.ramp + 1)):
            if f < ev.start:
                s = (f - (ev.start - ev.ramp)) / ev.ramp
            elif f > ev.end:
                s = 1.0 - (f - ev.end) / ev.ramp
            else:
                s = 1.0
            pos[f, ev.mover] = (1.0 - s) * pos[f, ev.mover] + s * target[f]

    for o in config.objects:
        half = np.array(o.size) / 2.0
        pos[:, o.object_id] = np.clip(pos[:, o.object_id], half, [config.width - half[0], config.height - half[1]])

    for ev in sorted(config.cuts, key=lambda c: c.frame):
        pos[ev.frame :] += np.asarray(ev.shift)
    return pos


def _background(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    img = np.empty((config.height, config.width, 3), dtype=np.float64)
    img[:] = np.asarray(config.background, dtype=np.float64)
    if config.background_noise > 0:
        cells = (config.height // config.noise_cell + 2, config.width // config.noise_cell + 2)
        coarse = rng.uniform(-1.0, 1.0, size=cells)
        ys = np.arange(config.height) / config.noise_cell
        xs = np.arange(config.width) / config.noise_cell
        y0, x0 = ys.astype(int), xs.astype(int)
        fy, fx = (ys - y0)[:, None], (xs - x0)[None, :]
        noise = (
            coarse[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
            + coarse[np.ix_(y0 + 1, x0)] * fy * (1 - fx)
            + coarse[np.ix_(y0, x0 + 1)] * (1 - fy) * fx
            + coarse[np.ix_(y0 + 1, x0 + 1)] * fy * fx
        )
        img += config.background_noise * noise[:, :, None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def render(config: ScenarioConfig, positions: np.ndarray, background: np.ndarray) -> np.ndarray:
    img = background.copy()
    for o in config.objects:
        x0, y0, x1, y1 = pixel_bounds(positions[o.object_id][None, :], o.size, config.width, config.height)[0]
        img[y0:y1, x0:x1] = o.color
    return img


def generate(config: ScenarioConfig, seed: int) -> SyntheticSequence:
    config.validate()
    rng = np.random.default_rng([seed, 7])
    positions = _paths(config, rng)
    background = _background(config, rng)
    frames, gt = [], []
    for t in range(config.n_frames):
        frames.append(Frame(render(config, positions[t], background)))
        for o in config.objects:
            gt.append(TrackRecord(t, o.object_id, _box(positions[t, o.object_id], o.size)))

    events: list[tuple[int, str]] = []
    for ev in config.occlusions:
        a, b = config.objects[ev.anchor], config.objects[ev.mover]
        for t in range(max(0, ev.start - ev.ramp), min(config.n_frames, ev.end + ev.ramp + 1)):
            ba = _box(positions[t, ev.anchor], a.size)
            bb = _box(positions[t, ev.mover], b.size)
            if iou(ba, bb) >= 0.5:
                events.append((t, f"occlusion:{ev.anchor}:{ev.mover}"))
    for ev in config.cuts:
        events.append((ev.frame, "cut"))
    events.sort()
    return SyntheticSequence(config, frames, gt, events, positions)


def _full_adjacency(n: int) -> list[list[int]]:
    return [[int(i != j) for j in range(n)] for i in range(n)]


def occlusion_cross() -> ScenarioConfig:
    """Two same-coloured players meet at the centre twice, then separate again."""
    size = (24, 48)
    a = [(0, 70, 100), (28, 148, 100), (42, 148, 100), (70, 70, 100), (98, 148, 100), (112, 148, 100), (140, 70, 100)]
    b = [(f, 320 - x + 12, y) for f, x, y in a]
    objects = [
        ObjectSpec(0, size, RED, waypoints=a, team="red", jitter=0.7),
        ObjectSpec(1, size, RED, waypoints=b, team="red", jitter=0.7),
        ObjectSpec(2, (140, 14), YELLOW, waypoints=[(0, 160, 200)]),
    ]
    return ScenarioConfig(
        name="occlusion-cross",
        width=320,
        height=240,
        objects=objects,
        n_frames=160,
        occlusions=[OcclusionEvent(1, 0, 30, 40), OcclusionEvent(1, 0, 100, 110)],
        adjacency=_full_adjacency(3),
        candidates=[[0, 0, 0], [0, 0, 0], [10, 10, 0]],
    )


def _wander(home: tuple[float, float], n_frames: int, step: int, radius: float, rng: np.random.Generator):
    pts = [(0, home[0], home[1])]
    for f in range(step, n_frames + step, step):
        dx, dy = rng.uniform(-radius, radius, size=2)
        pts.append((f, home[0] + dx, home[1] + dy))
    return pts


def camera_cut() -> ScenarioConfig:
    """Doubles layout: one team of two either side of a wide table; the view jumps at frame 50.

    The jump is shorter than the table is wide but several player widths long, so the
    table stays partly under its old box while every player is lost.
    """
    rng = np.random.default_rng(1301)
    n_frames = 120
    size = (24, 48)
    homes = [(250, 80), (390, 80), (250, 280), (390, 280)]
    colors = [RED, RED, BLUE, BLUE]
    teams = ["red", "red", "blue", "blue"]
    objects = [
        ObjectSpec(i, size, colors[i], waypoints=_wander(homes[i], n_frames, 20, 12, rng), team=teams[i], jitter=0.7)
        for i in range(4)
    ]
    objects.append(ObjectSpec(4, (300, 24), YELLOW, waypoints=[(0, 320, 180)]))
    adjacency = [
        [0, 1, 0, 0, 1],
        [1, 0, 0, 0, 1],
        [0, 0, 0, 1, 1],
        [0, 0, 1, 0, 1],
        [1, 1, 1, 1, 0],
    ]
    candidates = [[0] * 5 for _ in range(4)] + [[10, 10, 10, 10, 0]]
    return ScenarioConfig(
        name="camera-cut",
        width=640,
        height=360,
        objects=objects,
        n_frames=n_frames,
        cuts=[CutEvent(50, (165.0, 8.0))],
        adjacency=adjacency,
        candidates=candidates,
    )


def clutter_12() -> ScenarioConfig:
    """Volleyball-like layout: two teams of six either side of a net, textured background."""
    rng = np.random.default_rng(1402)
    n_frames = 150
    size = (24, 48)
    objects = []
    xs_red = (40, 85, 130)
    ys = (70, 170)
    homes = [(x, y) for y in ys for x in xs_red] + [(320 - x, y) for y in ys for x in xs_red]
    for i, home in enumerate(homes):
        team = "red" if i < 6 else "blue"
        objects.append(
            ObjectSpec(i, size, RED if i < 6 else BLUE, waypoints=_wander(home, n_frames, 25, 10, rng), team=team, jitter=0.6)
        )
    objects.append(ObjectSpec(12, (10, 150), WHITE, waypoints=[(0, 160, 120)]))
    n = 13
    adjacency = [[0] * n for _ in range(n)]
    for i in range(12):
        adjacency[i][12] = adjacency[12][i] = 1
        for j in range(12):
            if i != j and (i < 6) == (j < 6):
                adjacency[i][j] = 1
    candidates = [[0] * n for _ in range(12)] + [[10] * 12 + [0]]
    # teammates crossing plus front-row contacts at the net; higher ids are drawn on top
    occlusions = [
        OcclusionEvent(1, 0, 20, 30),
        OcclusionEvent(2, 8, 35, 45),
        OcclusionEvent(7, 6, 55, 65),
        OcclusionEvent(5, 11, 75, 85),
        OcclusionEvent(4, 3, 95, 105),
        OcclusionEvent(10, 9, 115, 125),
    ]
    return ScenarioConfig(
        name="clutter-12",
        width=320,
        height=240,
        objects=objects,
        n_frames=n_frames,
        occlusions=occlusions,
        background=(120, 120, 120),
        background_noise=45.0,
        adjacency=adjacency,
        candidates=candidates,
    )


def standard_suite() -> dict[str, ScenarioConfig]:
    return {
        "occlusion-cross": occlusion_cross(),
        "camera-cut": camera_cut(),
        "clutter-12": clutter_12(),
    }
