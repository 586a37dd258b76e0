"""Run configuration and its flat ``dotted.key = value`` text format.

Values are JSON literals, so matrices and kernels are written as nested
bracketed lists::

    graph.rho_a = 0.4
    topology.adjacency = [[0, 1], [1, 0]]
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from sgtrack.candidates import DEFAULT_SIGMA_DIST, DEFAULT_SIGMA_THETA, validate_candidate_matrix
from sgtrack.particle_filter import FilterParams
from sgtrack.scene import ScoreWeights
from sgtrack.structural import DEFAULT_KERNELS, check_kernels, validate_adjacency


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    pf: FilterParams = field(default_factory=FilterParams)
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    theta_bins: int = 18
    dist_bins: int = 25
    dist_range: tuple[float, float] = (0.0, 1.0)
    kernels: tuple = DEFAULT_KERNELS
    sigma_theta: float = DEFAULT_SIGMA_THETA
    sigma_d: float = DEFAULT_SIGMA_DIST
    tau_s: float = 0.4
    tau_o: float = 0.25
    tau_r: float = 0.2
    tau_i: int = 10
    n_ri: int = 10
    iou_threshold: float = 0.5
    adjacency: list | None = None
    candidates: list | None = None
    seed: int = 0

    def validate(self, n_objects: int | None = None) -> "RunConfig":
        try:
            self.pf.validate()
            self.weights.validate()
            check_kernels(self.kernels)
            if len(self.kernels) != 3:
                raise ValueError("exactly three kernels are required")
            if self.theta_bins < 1 or self.dist_bins < 1:
                raise ValueError("histogram bin counts must be positive")
            if not self.dist_range[1] > self.dist_range[0]:
                raise ValueError("dist_range must be increasing")
            for name in ("tau_s", "tau_o"):
                if not 0.0 <= getattr(self, name) <= 1.0:
                    raise ValueError(f"{name} must lie in [0, 1]")
            if self.tau_i < 1 or self.n_ri < 0:
                raise ValueError("tau_i must be >= 1 and n_ri >= 0")
            if self.sigma_theta < 0 or self.sigma_d < 0:
                raise ValueError("candidate noise deviations must be non-negative")
            if not 0.0 < self.iou_threshold <= 1.0:
                raise ValueError("iou_threshold must lie in (0, 1]")
            if self.adjacency is not None:
                adj = validate_adjacency(self.adjacency)
                if n_objects is not None and adj.shape[0] != n_objects:
                    raise ValueError(f"adjacency covers {adj.shape[0]} objects, sequence has {n_objects}")
                if self.candidates is not None:
                    validate_candidate_matrix(self.candidates, adj)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def with_topology(self, adjacency, candidates) -> "RunConfig":
        return replace(
            self,
            adjacency=np.asarray(adjacency).astype(int).tolist(),
            candidates=np.asarray(candidates).astype(int).tolist(),
        )


def plain_pf(config: RunConfig) -> RunConfig:
    """Ablation: independent particle filters, no candidates, appearance-only scoring."""
    n = len(config.adjacency) if config.adjacency is not None else 0
    return replace(
        config,
        weights=replace(config.weights, rho_a=1.0, rho_s=0.0, rho_o=0.0),
        candidates=[[0] * n for _ in range(n)] if n else config.candidates,
    )


_KEYS: dict[str, tuple[str | None, str]] = {
    "pf.n_particles": ("pf", "n_particles"),
    "pf.sigma_u": ("pf", "sigma_u"),
    "pf.alpha": ("pf", "alpha"),
    "pf.beta": ("pf", "beta"),
    "pf.tau_lambda": ("pf", "tau_lambda"),
    "pf.sigma_c": ("pf", "sigma_c"),
    "pf.sigma_b": ("pf", "sigma_b"),
    "graph.rho_a": ("weights", "rho_a"),
    "graph.rho_s": ("weights", "rho_s"),
    "graph.rho_o": ("weights", "rho_o"),
    "graph.rho_t": ("weights", "rho_t"),
    "model.theta_bins": (None, "theta_bins"),
    "model.dist_bins": (None, "dist_bins"),
    "model.dist_range": (None, "dist_range"),
    "model.kernels": (None, "kernels"),
    "candidates.sigma_theta": (None, "sigma_theta"),
    "candidates.sigma_d": (None, "sigma_d"),
    "candidates.tau_s": (None, "tau_s"),
    "candidates.tau_o": (None, "tau_o"),
    "trackers.tau_r": (None, "tau_r"),
    "optim.tau_i": (None, "tau_i"),
    "optim.n_ri": (None, "n_ri"),
    "eval.iou_threshold": (None, "iou_threshold"),
    "topology.adjacency": (None, "adjacency"),
    "topology.candidates": (None, "candidates"),
    "run.seed": (None, "seed"),
}
_INT_FIELDS = {"n_particles", "theta_bins", "dist_bins", "tau_i", "n_ri", "seed"}


def _coerce(attr: str, value):
    if attr in _INT_FIELDS:
        if isinstance(value, bool) or not float(value).is_integer():
            raise ConfigError(f"{attr} must be an integer, got {value!r}")
        return int(value)
    if attr == "dist_range":
        return (float(value[0]), float(value[1]))
    if attr == "kernels":
        return tuple(tuple(float(v) for v in k) for k in value)
    if attr in ("adjacency", "candidates"):
        return None if value is None else [[int(v) for v in row] for row in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{attr} must be numeric, got {value!r}")
    return float(value)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = replace(base or RunConfig())
    cfg.pf = replace(cfg.pf)
    cfg.weights = replace(cfg.weights)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {lineno}: cannot parse value {value!r}") from exc
        group, attr = _KEYS[key]
        try:
            coerced = _coerce(attr, parsed)
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
        setattr(getattr(cfg, group) if group else cfg, attr, coerced)
    return cfg


def _dump(value) -> str:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError("non-finite values cannot be serialised")
        return repr(value)
    if isinstance(value, tuple):
        value = [list(v) if isinstance(v, tuple) else v for v in value]
    return json.dumps(value, separators=(", ", ": "))


def format_config(cfg: RunConfig) -> str:
    lines = []
    for key, (group, attr) in _KEYS.items():
        value = getattr(getattr(cfg, group) if group else cfg, attr)
        if value is None:
            continue
        lines.append(f"{key} = {_dump(value)}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)
