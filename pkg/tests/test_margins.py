import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from distillbound.errors import ShapeError
from distillbound.margins import (
    distillation_distance, margin_histogram, ramp, ramp_distance, ramp_error, ramp_margin_loss, ramp_vector,
    raw_margins, softmax_error, softmax_gamma, softmax_gamma_jacobian,
)
from oracles import softmax_list

logits = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 5)),
                elements=st.floats(-30, 30, allow_nan=False))


def test_softmax_fixed_values():
    np.testing.assert_allclose(softmax_gamma(np.zeros(3), 0.7), [1 / 3] * 3, rtol=1e-15)
    np.testing.assert_allclose(softmax_gamma(np.array([math.log(2), 0.0]), 1.0), [2 / 3, 1 / 3], rtol=1e-15)


def test_softmax_stable_for_large_logits():
    p = softmax_gamma(np.array([1000.0, 0.0, -1000.0]), 1.0)
    assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1.0)


def test_softmax_matches_list_oracle():
    v = np.random.default_rng(0).standard_normal(5) * 3
    np.testing.assert_allclose(softmax_gamma(v, 0.4), softmax_list(list(v), 0.4), rtol=1e-13)


def test_temperature_must_be_positive():
    with pytest.raises(ValueError):
        softmax_gamma(np.zeros(2), 0.0)


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(1)
    for gamma in (0.3, 1.0, 4.0):
        v = rng.standard_normal(4)
        h = 1e-6
        num = np.empty((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            num[:, j] = (softmax_gamma(v + e, gamma) - softmax_gamma(v - e, gamma)) / (2 * h)
        ana = softmax_gamma_jacobian(v, gamma)
        assert np.max(np.abs(num - ana)) <= 1e-6 * np.max(np.abs(ana))


def test_distillation_distance_values():
    f = np.array([[1.0, 2.0, 0.5], [0.0, -1.0, 3.0]])
    g = np.array([[0.0, 0.0, 0.0], [2.0, 2.0, -2.0]])
    gamma = 0.5
    oracle = 0.0
    for a, b in zip(f, g):
        oracle += sum(abs(x - y) for x, y in zip(softmax_list(list(a), gamma), softmax_list(list(b), gamma)))
    assert distillation_distance(f, g, gamma) == pytest.approx(oracle / 2, rel=1e-12)
    assert distillation_distance(f, f, gamma) == 0.0


def test_distillation_distance_shape_errors():
    with pytest.raises(ShapeError):
        distillation_distance(np.zeros((2, 3)), np.zeros((2, 2)), 1.0)
    with pytest.raises(ShapeError):
        distillation_distance(np.zeros((0, 3)), np.zeros((0, 3)), 1.0)


@settings(max_examples=200, deadline=None)
@given(logits, st.data())
def test_distance_is_pseudometric(f, data):
    g = data.draw(arrays(np.float64, f.shape, elements=st.floats(-30, 30, allow_nan=False)))
    h = data.draw(arrays(np.float64, f.shape, elements=st.floats(-30, 30, allow_nan=False)))
    dfg = distillation_distance(f, g, 1.0)
    assert 0.0 <= dfg <= 2.0 + 1e-12
    assert dfg == distillation_distance(g, f, 1.0)
    assert dfg <= distillation_distance(f, h, 1.0) + distillation_distance(h, g, 1.0) + 1e-12


def test_large_temperature_flattens_distance():
    rng = np.random.default_rng(2)
    f, g = rng.uniform(-5, 5, (50, 4)), rng.uniform(-5, 5, (50, 4))
    assert distillation_distance(f, g, 1e6) <= 1e-4


def test_softmax_error_values():
    out = np.array([[50.0, 0.0], [0.0, 50.0]])
    assert softmax_error(out, [0, 1], 1.0) == pytest.approx(0.0, abs=1e-12)
    assert softmax_error(np.zeros((3, 4)), [0, 1, 2], 1.0) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        softmax_error(out, [0, 2], 1.0)


def test_lipschitz_and_two_times_softmax_error_bound():
    rng = np.random.default_rng(3)
    n, k = 100_000, 4
    for gamma in (0.5, 2.0):
        v = rng.standard_normal((n, k)) * 3
        u = v + rng.standard_normal((n, k)) * 0.5
        y = rng.integers(0, k, n)
        lip = np.abs(softmax_gamma(v, gamma) - softmax_gamma(u, gamma)).max(axis=1)
        assert np.all(lip <= np.abs(v - u).max(axis=1) / gamma + 1e-12)
        p = softmax_gamma(v, gamma)[np.arange(n), y]
        wrong = v.argmax(axis=1) != y
        assert not np.any(2 * (1 - p) < wrong)


def test_ramp_margin_loss_pieces():
    gamma = 0.8
    assert ramp_margin_loss(np.array([1.0, 1.0]), 0, gamma) == 1.0
    assert ramp_margin_loss(np.array([1.4, 1.0]), 0, gamma) == pytest.approx(0.5)
    assert ramp_margin_loss(np.array([3.0, 1.0]), 0, gamma) == 0.0
    assert ramp_margin_loss(np.array([0.0, 1.0, 2.0]), 0, gamma) == 1.0
    with pytest.raises(ShapeError):
        ramp_margin_loss(np.array([1.0]), 0, gamma)


def test_ramp_upper_bounds_zero_one_loss():
    rng = np.random.default_rng(4)
    v = rng.standard_normal((20000, 3))
    y = rng.integers(0, 3, 20000)
    wrong = v.argmax(axis=1) != y
    assert np.all(ramp(raw_margins(v, y), 0.5) >= wrong)
    rv = ramp_vector(v, 0.5)
    np.testing.assert_array_equal(rv[np.arange(len(y)), y], ramp(raw_margins(v, y), 0.5))


def test_ramp_distance_and_error():
    f = np.array([[2.0, 0.0], [0.0, 0.0]])
    g = np.array([[0.0, 2.0], [0.0, 0.0]])
    assert ramp_distance(f, f, 1.0) == 0.0
    assert ramp_distance(f, g, 1.0) == pytest.approx(1.0)
    assert ramp_error(f, [0, 0], 1.0) == pytest.approx(0.5)


def test_margin_histogram_single_bin():
    out = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    h = margin_histogram(out, [0, 1, 0], 1.0)
    assert h.q10 == 1.0 and h.median == 1.0
    assert list(h.counts) == [3] and list(h.bin_edges) == [1.0, 1.0]


def test_margin_histogram_counts_scaling_and_permutation():
    rng = np.random.default_rng(5)
    out = rng.standard_normal((200, 3))
    y = out.argmax(axis=1)
    h1 = margin_histogram(out, y, 1.0)
    h2 = margin_histogram(out, y, 2.0)
    assert h1.counts.sum() == 200 and len(h1.counts) == 64
    np.testing.assert_array_equal(h2.normalized_margins, raw_margins(out, y) / 2.0)
    np.testing.assert_allclose(h2.normalized_margins, h1.normalized_margins / 2, rtol=1e-15)
    yp = rng.permutation(y)
    assert margin_histogram(out, yp, 1.0).q10 < h1.q10
    assert h1.q10 == pytest.approx(np.quantile(raw_margins(out, y), 0.1))
    with pytest.raises(ShapeError):
        margin_histogram(np.zeros((0, 3)), [], 1.0)


def test_histogram_emission(tmp_path):
    out = np.random.default_rng(6).standard_normal((30, 2))
    h = margin_histogram(out, np.zeros(30, dtype=int), 0.5)
    h.write(tmp_path / "h.csv", gamma=1.0, extra={"seed": 3})
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count"
    assert sum(int(l.split(",")[2]) for l in lines[1:]) == 30
    meta = json.loads((tmp_path / "h.json").read_text())
    assert meta["normalizer"] == 0.5 and meta["gamma"] == 1.0 and meta["seed"] == 3
    assert meta["q10"] == h.q10
