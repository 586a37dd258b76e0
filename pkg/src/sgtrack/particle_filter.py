"""ConDensation tracker for a single object: resample, random-walk diffusion, reweight."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sgtrack.appearance import Frame, box_likelihoods
from sgtrack.geometry import BBox, Point2


@dataclass
class FilterParams:
    n_particles: int = 50
    sigma_u: float = 4.0
    alpha: float = 5.0
    beta: float = 25.0
    tau_lambda: float = 0.2
    sigma_c: float = 10.0
    sigma_b: float = 0.3

    def validate(self) -> None:
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        for name in ("sigma_u", "alpha", "beta", "tau_lambda", "sigma_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma_c < 0:
            raise ValueError("sigma_c must be non-negative")
        if self.tau_lambda > self.alpha:
            raise ValueError("tau_lambda must not exceed alpha")


@dataclass
class ParticleCloud:
    states: np.ndarray  # (n, 2) centroid hypotheses
    weights: np.ndarray  # (n,)
    box_size: tuple[float, float]
    model_hist: np.ndarray
    rng: np.random.Generator
    # None until the first reweight; adaptive_sigma then falls back to tau_lambda
    last_likelihood_sum: float | None = None
    last_confidence_product_sum: float = 0.0

    def __len__(self) -> int:
        return len(self.weights)

    def box(self) -> BBox:
        return BBox.at(estimate_state(self), self.box_size)


def init_cloud(
    center: Point2,
    box_size: tuple[float, float],
    model_hist: np.ndarray,
    params: FilterParams,
    rng: np.random.Generator,
) -> ParticleCloud:
    n = params.n_particles
    states = np.array([center.x, center.y]) + params.sigma_c * rng.standard_normal((n, 2))
    return ParticleCloud(
        states=states,
        weights=np.full(n, 1.0 / n),
        box_size=(float(box_size[0]), float(box_size[1])),
        model_hist=model_hist,
        rng=rng,
    )


def systematic_indices(weights: np.ndarray, offset: float) -> np.ndarray:
    """Systematic resampling of ``len(weights)`` indices using one uniform ``offset`` in [0, 1)."""
    n = len(weights)
    positions = offset + np.arange(n)
    # cumulative mass in particle units; snap rounding noise so equal weights
    # land exactly on the integer pointer grid
    cumulative = np.cumsum(weights) * (n / float(np.sum(weights)))
    nearest = np.rint(cumulative)
    cumulative = np.where(np.abs(cumulative - nearest) < 1e-9, nearest, cumulative)
    return np.minimum(np.searchsorted(cumulative, positions, side="right"), n - 1)


def resample(cloud: ParticleCloud, rng: np.random.Generator | None = None) -> ParticleCloud:
    rng = cloud.rng if rng is None else rng
    n = len(cloud)
    w = cloud.weights
    offset = rng.random()
    if not np.isfinite(w).all() or w.sum() <= 0:
        idx = np.arange(n)
    else:
        idx = systematic_indices(w, offset)
    cloud.states = cloud.states[idx]
    cloud.weights = np.full(n, 1.0 / n)
    return cloud


def adaptive_sigma(cloud: ParticleCloud, params: FilterParams) -> float:
    if cloud.last_likelihood_sum is None:
        lam_hat = params.tau_lambda
    else:
        s = min(cloud.last_likelihood_sum, params.beta)
        lam_hat = max(params.alpha * (1.0 - s / params.beta), params.tau_lambda)
    return lam_hat * params.sigma_u


def propagate(cloud: ParticleCloud, params: FilterParams, rng: np.random.Generator | None = None) -> ParticleCloud:
    rng = cloud.rng if rng is None else rng
    sigma = adaptive_sigma(cloud, params)
    noise = rng.standard_normal(cloud.states.shape)
    if sigma > 0:
        cloud.states = cloud.states + sigma * noise
    return cloud


def _apply_likelihoods(cloud: ParticleCloud, lik: np.ndarray) -> ParticleCloud:
    products = cloud.weights * lik
    total = float(products.sum())
    if total > 0:
        cloud.last_confidence_product_sum = total
        cloud.last_likelihood_sum = float(lik.sum())
        cloud.weights = products / total
    else:
        cloud.last_confidence_product_sum = 0.0
        cloud.last_likelihood_sum = 0.0
        cloud.weights = np.full(len(cloud), 1.0 / len(cloud))
    return cloud


def reweight(cloud: ParticleCloud, frame: Frame, sigma_b: float) -> ParticleCloud:
    lik = box_likelihoods(frame, cloud.model_hist, cloud.states, cloud.box_size, sigma_b)
    return _apply_likelihoods(cloud, lik)


def estimate_state(cloud: ParticleCloud) -> Point2:
    x, y = cloud.weights @ cloud.states
    return Point2(float(x), float(y))


def confidence(cloud: ParticleCloud) -> float:
    return 1.0 - math.exp(-cloud.last_confidence_product_sum)


def estimate_likelihood(cloud: ParticleCloud, frame: Frame, sigma_b: float) -> float:
    """Appearance likelihood of the box centred at the cloud's weighted-mean estimate."""
    p = estimate_state(cloud)
    return float(box_likelihoods(frame, cloud.model_hist, np.array([[p.x, p.y]]), cloud.box_size, sigma_b)[0])


def advance(cloud: ParticleCloud, frame: Frame, params: FilterParams) -> ParticleCloud:
    """One ConDensation iteration on ``frame``."""
    resample(cloud)
    propagate(cloud, params)
    return reweight(cloud, frame, params.sigma_b)
