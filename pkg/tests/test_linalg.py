import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from distillbound.errors import ConvergenceError, ParseError
from distillbound.linalg import (
    frobenius_norm, norm21_of_transpose, norm_profile, project_frobenius, read_dbm, spectral_norm,
    stable_rank, write_dbm,
)
from oracles import frobenius_loop, row_norm_sum_loop, top_singular_value

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
matrices = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite)


def test_frobenius_fixed_values():
    assert frobenius_norm(np.zeros((2, 2))) == 0.0
    assert frobenius_norm(np.eye(3)) == pytest.approx(math.sqrt(3), rel=1e-15)


def test_frobenius_matches_loop():
    a = np.random.default_rng(0).standard_normal((10, 7))
    assert frobenius_norm(a) == pytest.approx(frobenius_loop(a), rel=1e-12)


def test_spectral_fixed_values():
    assert spectral_norm(np.diag([3.0, 1.0, 0.5])) == pytest.approx(3.0, rel=1e-9)
    u = np.array([2.0, 0.0, 0.0])
    v = np.array([0.0, 3.0, 4.0, 0.0])
    assert spectral_norm(np.outer(u, v)) == pytest.approx(10.0, rel=1e-9)
    assert spectral_norm(np.zeros((3, 2))) == 0.0


def test_spectral_matches_jacobi():
    a = np.random.default_rng(1).standard_normal((8, 6))
    assert spectral_norm(a) == pytest.approx(top_singular_value(a), rel=1e-8)


def test_spectral_nonconvergence_reports_last_iterate():
    # two equal top singular values with opposite signs never settle the direction quickly
    a = np.diag([1.0, 0.999999, 0.1])
    with pytest.raises(ConvergenceError) as exc:
        spectral_norm(a, tol=1e-15, max_iter=3)
    sigma, v = exc.value.last
    assert 0.9 < sigma <= 1.0 + 1e-12
    assert v.shape == (3,)


@pytest.mark.parametrize("c", [-2.0, 0.0, 0.5])
def test_spectral_homogeneity(c):
    a = np.random.default_rng(2).standard_normal((5, 4))
    assert spectral_norm(c * a) == pytest.approx(abs(c) * spectral_norm(a), rel=1e-9, abs=1e-15)


def test_norm21_fixed_values():
    assert norm21_of_transpose(np.eye(3)) == pytest.approx(3.0)
    # the sum runs over rows of W (one row per output unit)
    assert norm21_of_transpose(np.array([[3.0, 4.0]])) == pytest.approx(5.0)
    assert norm21_of_transpose(np.array([[3.0], [4.0]])) == pytest.approx(7.0)


def test_norm21_matches_loop():
    w = np.random.default_rng(3).standard_normal((5, 9))
    assert norm21_of_transpose(w) == pytest.approx(row_norm_sum_loop(w), rel=1e-12)


def test_stable_rank_fixed_values():
    assert stable_rank(np.zeros((3, 3))) == 0.0
    assert stable_rank(np.eye(4)) == pytest.approx(4.0, rel=1e-9)
    assert stable_rank(np.outer([1.0, 2.0], [3.0, 1.0, 1.0])) == pytest.approx(1.0, rel=1e-9)


def test_norm_chain_on_random_matrices():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        a = rng.standard_normal(tuple(rng.integers(1, 8, size=2)))
        p = norm_profile(a)
        assert p.spectral <= p.frobenius * (1 + 1e-9)
        assert p.frobenius <= p.norm21 * (1 + 1e-12)
        assert 1 - 1e-9 <= p.stable_rank <= min(a.shape) + 1e-9


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_norm_chain_property(a):
    p = norm_profile(a)
    assert p.spectral <= p.frobenius * (1 + 1e-9) + 1e-12
    assert p.frobenius <= p.norm21 * (1 + 1e-12) + 1e-12


@settings(max_examples=200, deadline=None)
@given(matrices, st.floats(0.0, 20.0))
def test_projection_properties(x, radius):
    y = project_frobenius(x, radius)
    assert np.linalg.norm(y) <= radius + 1e-12
    if np.linalg.norm(x) <= radius:
        assert y is x
    np.testing.assert_allclose(project_frobenius(y, radius), y, rtol=1e-12, atol=1e-300)


def test_dbm_round_trip(tmp_path):
    a = np.random.default_rng(5).standard_normal((3, 4))
    p = tmp_path / "a.dbm"
    write_dbm(p, a)
    raw = p.read_bytes()
    assert raw[:4] == b"DBM1"
    assert struct.unpack("<II", raw[4:12]) == (3, 4)
    assert len(raw) == 12 + 8 * 12
    np.testing.assert_array_equal(read_dbm(p), a)


def test_dbm_rejects_bad_input(tmp_path):
    p = tmp_path / "bad.dbm"
    p.write_bytes(b"DBM1" + struct.pack("<II", 2, 2) + b"\0" * 8)
    with pytest.raises(ParseError):
        read_dbm(p)
    p.write_bytes(b"XXXX" + struct.pack("<II", 0, 0))
    with pytest.raises(ParseError):
        read_dbm(p)
    p.write_bytes(b"DB")
    with pytest.raises(ParseError):
        read_dbm(p)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        frobenius_norm(np.array([[np.nan]]))
