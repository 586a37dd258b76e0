import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import solid_frame
from sgtrack.appearance import extract_histogram
from sgtrack.geometry import BBox, Point2
from sgtrack.particle_filter import (
    FilterParams,
    ParticleCloud,
    adaptive_sigma,
    advance,
    confidence,
    estimate_likelihood,
    estimate_state,
    init_cloud,
    propagate,
    resample,
    reweight,
    systematic_indices,
)

RED = (210, 40, 40)
GREEN = (40, 140, 60)


def cloud_at(states, weights=None, model=None, seed=0):
    states = np.asarray(states, dtype=float)
    n = len(states)
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    model = np.eye(110)[9] if model is None else model
    return ParticleCloud(states, w, (10.0, 10.0), model, np.random.default_rng(seed))


def red_scene():
    frame = solid_frame(100, 100, GREEN, patches=[(40, 40, 60, 60, RED)])
    model = extract_histogram(frame, BBox(50, 50, 20, 20))
    return frame, model


def test_init_uniform_weights(rng):
    p = FilterParams()
    c = init_cloud(Point2(5, 5), (10, 10), np.eye(110)[0], p, rng)
    assert len(c) == 50
    assert (c.weights == 0.02).all()


def test_init_zero_spread(rng):
    p = FilterParams(sigma_c=0.0)
    c = init_cloud(Point2(3, 4), (10, 10), np.eye(110)[0], p, rng)
    assert (c.states == [3, 4]).all()


def test_init_mean_within_three_standard_errors():
    p = FilterParams()
    bound = 3 * p.sigma_c / math.sqrt(p.n_particles)
    hits = 0
    for seed in range(1000):
        c = init_cloud(Point2(100, 50), (10, 10), np.eye(110)[0], p, np.random.default_rng(seed))
        err = np.abs(c.states.mean(axis=0) - [100, 50])
        hits += bool((err <= bound).all())
    assert hits >= 990


def test_resample_degenerate():
    c = cloud_at(np.arange(10).reshape(5, 2), [1, 0, 0, 0, 0])
    resample(c)
    assert (c.states == [0, 1]).all()
    assert (c.weights == 0.2).all()


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60), st.floats(0, 0.999999))
def test_resample_preserves_count(weights, offset):
    w = np.asarray(weights)
    if w.sum() == 0:
        w = w + 1
    idx = systematic_indices(w / w.sum(), offset)
    assert len(idx) == len(w)
    assert idx.min() >= 0 and idx.max() < len(w)
    # zero-weight particles are never picked
    assert (w[idx] > 0).all()


def test_uniform_systematic_picks_each_once():
    for offset in (0.0, 0.3, 0.999):
        idx = systematic_indices(np.full(50, 1 / 50), offset)
        assert sorted(idx.tolist()) == list(range(50))


def test_resample_all_zero_falls_back_to_identity():
    c = cloud_at(np.arange(6).reshape(3, 2), [0, 0, 0])
    resample(c)
    assert (c.states == np.arange(6).reshape(3, 2)).all()
    assert (c.weights == 1 / 3).all()


def test_adaptive_sigma_examples():
    p = FilterParams(sigma_u=8.0, alpha=5.0, beta=25.0, tau_lambda=0.2)
    c = cloud_at([[0, 0]])
    assert adaptive_sigma(c, p) == pytest.approx(0.2 * 8.0)  # no history yet
    c.last_likelihood_sum = 25.0
    assert adaptive_sigma(c, p) == pytest.approx(0.2 * 8.0, rel=1e-12)
    c.last_likelihood_sum = 0.0
    assert adaptive_sigma(c, p) == pytest.approx(5 * 8.0, rel=1e-12)
    c.last_likelihood_sum = 20.0
    assert adaptive_sigma(c, p) == pytest.approx(8.0, rel=1e-12)
    c.last_likelihood_sum = 40.0  # clipped at beta
    assert adaptive_sigma(c, p) == pytest.approx(0.2 * 8.0, rel=1e-12)


def test_propagate_zero_noise_keeps_states():
    p = FilterParams(sigma_u=1e-300, tau_lambda=1e-300)
    c = cloud_at([[1, 2], [3, 4]])
    before = c.states.copy()
    w = c.weights.copy()
    propagate(c, p)
    np.testing.assert_allclose(c.states, before, atol=1e-200)
    assert (c.weights == w).all()


def test_propagate_sample_deviation():
    p = FilterParams(n_particles=10_000, sigma_u=8.0)
    c = cloud_at(np.zeros((10_000, 2)))
    c.last_likelihood_sum = 20.0
    propagate(c, p)
    std = c.states.std(axis=0)
    assert np.all(np.abs(std - 8.0) <= 0.05 * 8.0)


def test_reweight_equal_likelihoods_keep_weights():
    frame, model = red_scene()
    c = cloud_at([[50, 50], [50, 50], [50, 50]], [0.2, 0.3, 0.5], model)
    reweight(c, frame, 0.2)
    np.testing.assert_allclose(c.weights, [0.2, 0.3, 0.5], rtol=1e-12)


def test_reweight_zero_and_one():
    frame, model = red_scene()
    # second particle's box is off-frame: likelihood 0
    c = cloud_at([[50, 50], [500, 500]], [0.5, 0.5], model)
    reweight(c, frame, 0.2)
    assert c.weights.tolist() == [1.0, 0.0]
    assert c.last_likelihood_sum == pytest.approx(1.0)
    assert c.last_confidence_product_sum == pytest.approx(0.5)


def test_reweight_accumulator_is_one_for_perfect_match():
    frame, model = red_scene()
    c = cloud_at(np.full((50, 2), 50.0), None, model)
    reweight(c, frame, 0.2)
    assert c.last_confidence_product_sum == pytest.approx(1.0, rel=1e-12)
    assert c.last_likelihood_sum == pytest.approx(50.0, rel=1e-12)
    assert confidence(c) == pytest.approx(1 - math.exp(-1), rel=1e-12)


def test_reweight_all_zero_resets_uniform():
    frame, model = red_scene()
    c = cloud_at([[500, 500], [600, 600]], [0.9, 0.1], model)
    reweight(c, frame, 0.2)
    assert c.weights.tolist() == [0.5, 0.5]
    assert c.last_confidence_product_sum == 0.0 and c.last_likelihood_sum == 0.0


def test_estimate_state_examples():
    assert estimate_state(cloud_at([[0, 0], [4, 8]], [0.25, 0.75])) == Point2(3, 6)
    assert estimate_state(cloud_at([[7, -2]], [1.0])) == Point2(7, -2)
    pts = [[0, 0], [1, 5], [2, 7]]
    e = estimate_state(cloud_at(pts))
    assert (e.x, e.y) == pytest.approx((1, 4), rel=1e-12)


def test_confidence_examples():
    c = cloud_at([[0, 0]])
    assert confidence(c) == 0.0
    c.last_confidence_product_sum = 1.0
    assert confidence(c) == pytest.approx(0.632121, abs=1e-6)
    c.last_confidence_product_sum = 30.0
    assert confidence(c) < 1.0


@given(st.floats(0, 30), st.floats(0, 30))
def test_confidence_monotone(a, b):
    lo, hi = sorted((a, b))
    c1, c2 = cloud_at([[0, 0]]), cloud_at([[0, 0]])
    c1.last_confidence_product_sum, c2.last_confidence_product_sum = lo, hi
    assert confidence(c1) <= confidence(c2) < 1.0


def test_estimate_likelihood_examples():
    frame, model = red_scene()
    c = cloud_at([[50, 50]], [1.0], model)
    assert estimate_likelihood(c, frame, 0.2) == 1.0
    c = cloud_at([[10, 10]], [1.0], model)
    assert estimate_likelihood(c, frame, 0.2) == pytest.approx(3.727e-6, rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_weights_normalized_after_advance(seed):
    frame, model = red_scene()
    p = FilterParams()
    c = init_cloud(Point2(50, 50), (20, 20), model, p, np.random.default_rng(seed))
    for _ in range(3):
        advance(c, frame, p)
        assert len(c) == p.n_particles
        assert c.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_advance_is_deterministic():
    frame, model = red_scene()
    p = FilterParams()
    runs = []
    for _ in range(2):
        c = init_cloud(Point2(45, 52), (20, 20), model, p, np.random.default_rng(99))
        for _ in range(10):
            advance(c, frame, p)
        runs.append((c.states.copy(), c.weights.copy()))
    assert np.array_equal(runs[0][0], runs[1][0])
    assert np.array_equal(runs[0][1], runs[1][1])


def test_static_target_stays_locked():
    frame = solid_frame(160, 120, GREEN, patches=[(68, 36, 92, 84, RED)])
    box = BBox.from_extent(68, 36, 92, 84)
    model = extract_histogram(frame, box)
    p = FilterParams()
    good = total = 0
    for seed in range(20):
        c = init_cloud(box.center, (box.width, box.height), model, p, np.random.default_rng(seed))
        for _ in range(100):
            advance(c, frame, p)
            e = estimate_state(c)
            good += math.hypot(e.x - box.cx, e.y - box.cy) <= 2 * p.sigma_u
            total += 1
    assert good / total >= 0.95
