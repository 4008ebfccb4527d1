import json
import math

import numpy as np
import pytest

from distillbound.errors import PreconditionError, ShapeError, UnsupportedError
from distillbound.linalg import norm21_of_transpose, spectral_norm
from distillbound.sparsify import (
    SamplingMatrix, cover21_log_cardinality, cover21_sample, infty_grid_cover_round, maurey_product,
    maurey_product_bounded, network_sparsify, sparsification_bound,
)


def _fro(a):
    return float(np.linalg.norm(a))


def test_equal_column_norms_full_sampling_is_exact():
    A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    B = np.random.default_rng(0).standard_normal((4, 3))
    # with k = m draws and equal norms, a draw covering every column is exact
    _, err = maurey_product(A, B, 3, draws=64, seed=1)
    assert err <= 1e-6


def test_maurey_random_fixture_within_guarantee():
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((20, 50)), rng.standard_normal((30, 50))
    sm, err = maurey_product(A, B, 25, draws=32, seed=2)
    assert err <= _fro(A) * _fro(B) / 5
    np.testing.assert_allclose(err, _fro(A @ B.T - A @ sm.dense() @ B.T), rtol=1e-10)


def test_maurey_zero_b_and_zero_a():
    A = np.random.default_rng(2).standard_normal((3, 6))
    _, err = maurey_product(A, np.zeros((4, 6)), 2)
    assert err == 0.0
    sm, err = maurey_product(np.zeros((3, 6)), np.ones((4, 6)), 2)
    assert err == 0.0 and sm.k == 0


def test_maurey_shape_errors():
    with pytest.raises(ShapeError):
        maurey_product(np.ones((2, 3)), np.ones((2, 4)), 1)
    with pytest.raises(ValueError):
        maurey_product(np.ones((2, 3)), np.ones((2, 3)), 0)


def test_maurey_unbiased_over_many_draws():
    rng = np.random.default_rng(3)
    A, B = rng.standard_normal((4, 6)), rng.standard_normal((5, 6))
    col = np.linalg.norm(A, axis=0)
    p = col**2 / np.sum(col**2)
    k, draws = 3, 10_000
    idx = rng.choice(6, size=(draws, k), p=p)
    coef = np.sum(col**2) / (k * col[idx] ** 2)
    mean = np.zeros((4, 5))
    for row, c in zip(idx, coef):
        d = np.zeros(6)
        np.add.at(d, row, c)
        mean += (A * d) @ B.T
    mean /= draws
    assert _fro(mean - A @ B.T) / _fro(A @ B.T) <= 0.05


def test_maurey_median_error_nonincreasing_in_k():
    rng = np.random.default_rng(4)
    A, B = rng.standard_normal((10, 40)), rng.standard_normal((10, 40))
    med = []
    for k in (4, 8, 16, 32):
        med.append(np.median([maurey_product(A, B, k, seed=s, require_bound=False)[1] for s in range(50)]))
    assert all(b <= a for a, b in zip(med, med[1:]))


def test_sampling_matrix_json_round_trip():
    rng = np.random.default_rng(5)
    sm, _ = maurey_product(rng.standard_normal((3, 8)), rng.standard_normal((2, 8)), 4, seed=0)
    back = SamplingMatrix.from_json(json.loads(sm.dumps()))
    np.testing.assert_array_equal(back.diagonal(), sm.diagonal())
    assert set(json.loads(sm.dumps())) >= {"indices", "weights", "dims"}


def test_bounded_random_fixture_and_weight_cap():
    rng = np.random.default_rng(6)
    A, B = rng.standard_normal((16, 64)), rng.standard_normal((16, 64))
    sm, err, mw = maurey_product_bounded(A, B, 16, seed=1)
    assert err <= 2 * _fro(A) * _fro(B) / 4
    assert np.all(sm.z <= _fro(A) * 2) and mw == sm.z.max()


def test_bounded_threshold_inactive_matches_plain():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    B = np.random.default_rng(7).standard_normal((3, 2))
    sm1, e1 = maurey_product(A, B, 200, seed=9)
    sm2, e2, _ = maurey_product_bounded(A, B, 200, seed=9)
    np.testing.assert_array_equal(sm1.indices, sm2.indices)
    assert e1 == e2


def test_bounded_single_huge_column():
    A = np.full((4, 30), 1e-4)
    A[:, 0] = 100.0
    B = np.random.default_rng(8).standard_normal((5, 30))
    k = 8
    sm, err, _ = maurey_product_bounded(A, B, k, seed=0)
    assert set(sm.indices.tolist()) == {0}
    tau = _fro(A) / math.sqrt(30 * k)
    assert err <= tau * math.sqrt(30) * _fro(B) + 1e-9


def test_bounded_weight_cap_over_many_trials():
    for s in range(50):
        rng = np.random.default_rng(100 + s)
        A = rng.standard_normal((6, 20)) * rng.exponential(1.0, 20)
        B = rng.standard_normal((4, 20))
        k = int(rng.integers(1, 40))
        sm, _, _ = maurey_product_bounded(A, B, k, seed=s, require_bound=False)
        assert np.all(sm.z <= _fro(A) * math.sqrt(20 / k))


def test_cover21_zero_matrix():
    el, err = cover21_sample(np.zeros((3, 4)), np.ones((5, 4)), 1.0, 6)
    assert err == 0.0 and not el.dense().any()


def test_cover21_random_fixture():
    rng = np.random.default_rng(9)
    W, X = rng.standard_normal((8, 12)), rng.standard_normal((30, 12))
    r = norm21_of_transpose(W)
    el, err = cover21_sample(W, X, r, 64, seed=3)
    assert err <= r * _fro(X) / 8
    np.testing.assert_allclose(err, _fro(W @ X.T - el.dense() @ X.T), rtol=1e-10)


def test_cover21_rejects_large_norm():
    with pytest.raises(PreconditionError):
        cover21_sample(np.ones((2, 2)), np.ones((3, 2)), 0.5, 4)


def test_cover21_cardinality_symbolic():
    assert cover21_log_cardinality(30, 12, 64) == pytest.approx(64 * math.log(2 * 30 * 12))


def test_network_sparsify_discrepancy_shrinks_with_k():
    d = 8
    weights = [np.eye(d), np.eye(d)]
    X = np.abs(np.random.default_rng(10).standard_normal((5, d)))
    small = [network_sparsify(weights, X, [2, 2], seed=s).discrepancy for s in range(20)]
    large = [network_sparsify(weights, X, [400, 400], seed=s) for s in range(20)]
    assert all(r.discrepancy <= 2 * r.bound_value for r in large)
    assert np.median([r.discrepancy for r in large]) < 0.5 * np.median(small)


def test_network_sparsify_single_identity_layer_matches_bounded():
    rng = np.random.default_rng(11)
    W, X = rng.standard_normal((6, 10)), rng.standard_normal((7, 10))
    res = network_sparsify([W], X, [5], gates=["identity"], seed=4)
    seed = int(np.random.default_rng(4).integers(2**63))
    _, err, _ = maurey_product_bounded(W, X, 5, seed=seed)
    assert res.layer_errors[0] == err
    assert res.discrepancy == pytest.approx(err, rel=1e-9) or res.discrepancy <= err


def test_network_sparsify_rejects_non_homogeneous_gate():
    with pytest.raises(UnsupportedError):
        network_sparsify([np.eye(2)], np.ones((1, 2)), [1], gates=["tanh"])


def test_sparsification_bound_formula():
    W = [np.diag([2.0, 1.0]), np.diag([1.0, 1.0])]
    X = np.ones((1, 2))
    expect = math.sqrt(2) * 2.0 * (math.sqrt(1.25 / 2) + math.sqrt(2.0 / 2))
    assert sparsification_bound(W, X, [2, 2]) == pytest.approx(expect, rel=1e-12)
    assert spectral_norm(W[0]) == pytest.approx(2.0)


def test_grid_round_on_grid_is_identity():
    A = np.zeros((4, 4))
    A[0, 1], A[2, 3] = 0.25, -0.5
    hat, _ = infty_grid_cover_round(A, 2, 2, 1.0, 0.5)
    np.testing.assert_array_equal(hat, A)


def test_grid_round_random_supported():
    rng = np.random.default_rng(12)
    for s in range(20):
        A = np.zeros((10, 12))
        rows = rng.choice(10, 3, replace=False)
        cols = rng.choice(12, 4, replace=False)
        A[np.ix_(rows, cols)] = rng.uniform(-2, 2, (3, 4))
        eps = float(rng.uniform(0.01, 1))
        hat, lc = infty_grid_cover_round(A, 3, 4, 2.0, eps)
        assert _fro(A - hat) <= eps and lc >= 0


def test_grid_round_coarse_grid_gives_zero():
    A = np.zeros((3, 3))
    A[0, 0] = 0.9
    hat, _ = infty_grid_cover_round(A, 1, 1, 1.0, 2.5)
    assert not hat.any() and _fro(A - hat) <= 2.5


def test_grid_round_preconditions():
    with pytest.raises(PreconditionError):
        infty_grid_cover_round(np.ones((2, 2)), 1, 2, 1.0, 0.1)
    with pytest.raises(PreconditionError):
        infty_grid_cover_round(np.full((1, 1), 3.0), 1, 1, 1.0, 0.1)
