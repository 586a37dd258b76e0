import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import solid_frame
from sgtrack.geometry import BBox, Point2
from sgtrack.structural import (
    DEFAULT_KERNELS,
    KERNEL_HIGH,
    KERNEL_LOW,
    KERNEL_MID,
    AttributeHistogram,
    EmptyHistogramError,
    ModelGraph,
    init_model,
    kernel_sums_to_one,
    select_kernel,
    update_model,
    validate_adjacency,
)

# five objects: four players and a reference line
ADJ5 = [
    [0, 1, 0, 0, 1],
    [1, 0, 0, 0, 1],
    [0, 0, 0, 1, 1],
    [0, 0, 1, 0, 1],
    [1, 1, 1, 1, 0],
]


def five_boxes():
    return [BBox(20 + 30 * i, 30, 10, 20) for i in range(4)] + [BBox(100, 80, 150, 6)]


def test_kernels_sum_to_one_exactly():
    for k in DEFAULT_KERNELS:
        assert kernel_sums_to_one(k)


def test_select_kernel():
    assert select_kernel(0.9) == KERNEL_HIGH
    assert select_kernel(0.5) == KERNEL_MID
    assert select_kernel(0.1) == KERNEL_LOW
    # boundaries belong to the wider kernel
    assert select_kernel(0.7) == KERNEL_MID
    assert select_kernel(0.3) == KERNEL_LOW


def test_vote_bounded_centre():
    h = AttributeHistogram.distance(25)
    h.vote(0.5, KERNEL_HIGH)
    assert h.bin_index(0.5) == 12
    assert h.bins[11:14].tolist() == [0.3, 0.4, 0.3]
    assert h.total == pytest.approx(1.0)


def test_vote_circular_wraps():
    h = AttributeHistogram.angle(18)
    h.vote(0.01, KERNEL_HIGH)
    assert (h.bins[17], h.bins[0], h.bins[1]) == (0.3, 0.4, 0.3)


def test_vote_bounded_clamps_into_edge():
    h = AttributeHistogram.distance(25)
    h.vote(0.0, KERNEL_HIGH)
    assert h.bins[0] == pytest.approx(0.7)
    assert h.bins[1] == pytest.approx(0.3)
    h = AttributeHistogram.distance(25)
    h.vote(1.7, KERNEL_LOW)  # past the range: last bin
    assert h.bins[-1] == pytest.approx(0.1 + 0.13 + 0.17 + 0.2)
    assert h.total == pytest.approx(1.0)


def test_vote_rejects_nan():
    with pytest.raises(ValueError):
        AttributeHistogram.distance().vote(float("nan"), KERNEL_HIGH)


def test_bin_index_edges():
    h = AttributeHistogram.distance(25)
    assert h.bin_index(1.0) == 24
    assert h.bin_index(-0.1) == 0
    a = AttributeHistogram.angle(18)
    assert a.bin_index(2 * math.pi) == 0
    assert a.bin_index(-0.01) == 17


def test_lookup_examples():
    h = AttributeHistogram(25, 0, 1, False, [2, 1] + [0] * 23)
    assert h.lookup_likelihood(0.01) == 1.0
    assert h.lookup_likelihood(0.05) == 0.5
    assert h.lookup_likelihood(0.5) == 0.0
    with pytest.raises(EmptyHistogramError):
        AttributeHistogram.distance().lookup_likelihood(0.1)


@given(
    st.lists(
        st.tuples(st.booleans(), st.floats(-1.0, 8.0), st.integers(0, 2)),
        min_size=1,
        max_size=200,
    )
)
def test_mass_and_mode(votes):
    hists = {True: AttributeHistogram.angle(), False: AttributeHistogram.distance()}
    counts = {True: 0, False: 0}
    for circ, value, k in votes:
        hists[circ].vote(value, DEFAULT_KERNELS[k])
        counts[circ] += 1
    for circ, h in hists.items():
        assert h.total == pytest.approx(counts[circ], abs=1e-9)
        if counts[circ]:
            lik = [h.lookup_likelihood(h.bin_center(i)) for i in range(h.n_bins)]
            assert max(lik) == 1.0 and min(lik) >= 0.0


def test_circular_wrap_mass_matches_interior():
    a, b = AttributeHistogram.angle(), AttributeHistogram.angle()
    a.vote(0.0, KERNEL_LOW)
    b.vote(math.pi, KERNEL_LOW)
    assert a.total == b.total
    assert sorted(a.bins) == sorted(b.bins)


def test_sampling_matches_bin_masses():
    h = AttributeHistogram.distance(25)
    rng = np.random.default_rng(3)
    for v in rng.uniform(0, 1, 40):
        h.vote(v, DEFAULT_KERNELS[int(rng.integers(3))])
    samples = h.sample(rng, 100_000)
    counts = np.bincount([h.bin_index(s) for s in samples], minlength=25)
    tv = 0.5 * np.abs(counts / counts.sum() - h.bins / h.total).sum()
    assert tv < 0.02


def test_validate_adjacency():
    with pytest.raises(ValueError):
        validate_adjacency([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        validate_adjacency([[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        validate_adjacency([[0, 2], [1, 0]])
    with pytest.raises(ValueError):
        validate_adjacency([[0, 1, 0], [1, 0, 0]])


def test_init_model_edges_and_mass():
    frame = solid_frame(200, 100)
    model = init_model(five_boxes(), frame, ADJ5)
    # twelve directed edges: the doubles layout minus the opposing pairs
    assert int(np.sum(ADJ5)) == 12
    assert len(model.edges) == 12
    assert set(model.theta) == set(model.edges) == set(model.dist)
    for e in model.edges:
        assert model.theta[e].total == pytest.approx(1.0)
        assert model.dist[e].total == pytest.approx(1.0)
        assert model.theta[e].bins.max() == 0.4  # confidence-1 kernel


def test_init_model_distance_bin():
    frame = solid_frame(200, 100)
    boxes = [BBox(40, 50, 10, 10), BBox(140, 50, 10, 10)]
    model = init_model(boxes, frame, [[0, 1], [1, 0]])
    h = model.dist[0, 1]
    assert int(np.argmax(h.bins)) == 12
    assert h.bins[11:14].tolist() == [0.3, 0.4, 0.3]
    # 0 -> 1 points along +x, 1 -> 0 along -x
    assert int(np.argmax(model.theta[0, 1].bins)) == 0
    assert int(np.argmax(model.theta[1, 0].bins)) == 9


def test_init_model_requires_every_box():
    frame = solid_frame(200, 100)
    with pytest.raises(ValueError):
        init_model(five_boxes()[:4], frame, ADJ5)


def test_update_model_mass_and_concentration():
    frame = solid_frame(200, 100)
    boxes = five_boxes()
    model = init_model(boxes, frame, ADJ5)
    positions = [b.center for b in boxes]
    for _ in range(9):
        update_model(model, positions, [0.95] * 5)
    for e in model.edges:
        assert model.dist[e].total == pytest.approx(10.0, abs=1e-9)
        assert np.count_nonzero(model.dist[e].bins) <= 3


def test_update_model_low_confidence_uses_wide_kernel():
    frame = solid_frame(200, 100)
    boxes = [BBox(40, 50, 10, 10), BBox(140, 50, 10, 10)]
    model = init_model(boxes, frame, [[0, 1], [1, 0]])
    before = model.dist[0, 1].bins.copy()
    before_back = model.dist[1, 0].bins.copy()
    update_model(model, [b.center for b in boxes], [0.0, 1.0])
    assert np.count_nonzero(model.dist[0, 1].bins - before) == 7
    assert np.count_nonzero(model.dist[1, 0].bins - before_back) == 3  # origin 1 is confident


def test_coincident_vertices_vote_at_zero():
    frame = solid_frame(200, 100)
    boxes = [BBox(40, 50, 10, 10), BBox(40, 50, 10, 10)]
    model = init_model(boxes, frame, [[0, 1], [1, 0]])
    assert model.dist[0, 1].bins[0] == pytest.approx(0.7)
    assert model.theta[0, 1].bins[0] == pytest.approx(0.4)


def test_model_text_round_trip():
    frame = solid_frame(200, 100)
    model = init_model(five_boxes(), frame, ADJ5)
    update_model(model, [Point2(10 * i, 5 * i) for i in range(5)], [0.1, 0.5, 0.9, 0.2, 0.8])
    back = ModelGraph.from_text(model.to_text())
    assert back.to_text() == model.to_text()
    assert (back.adjacency == model.adjacency).all()
    for e in model.edges:
        assert np.array_equal(back.theta[e].bins, model.theta[e].bins)
