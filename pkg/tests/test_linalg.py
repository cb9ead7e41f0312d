from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volratio.errors import NotPositiveDefinite
from volratio.linalg import (
    LinearMap,
    RngStream,
    inv_sqrt_psd,
    log_abs_det,
    random_rotation,
    sample_gaussian_matrix,
    sample_gaussian_vector,
    sample_sphere,
    singular_values,
)


@pytest.mark.parametrize(
    "m, expected",
    [
        (np.eye(3), (0.0, 1)),
        (np.diag([2.0, 0.5]), (0.0, 1)),
        (np.array([[0.0, 1.0], [1.0, 0.0]]), (0.0, -1)),
    ],
)
def test_log_abs_det_examples(m, expected):
    ld, sign = log_abs_det(m)
    assert sign == expected[1]
    assert ld == pytest.approx(expected[0], abs=1e-14)


def test_log_abs_det_singular_reports_sign_zero():
    ld, sign = log_abs_det(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert sign == 0 and ld == -math.inf
    ld, sign = log_abs_det(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-17]]))
    assert sign == 0


def test_log_abs_det_rejects_non_square():
    with pytest.raises(ValueError):
        log_abs_det(np.ones((2, 3)))


def test_log_abs_det_multiplicative():
    rng = RngStream(11)
    for k in range(20):
        r = rng.substream(k)
        a = random_rotation(6, r) @ np.diag(np.exp(r.normal(6) * 0.3))
        b = np.diag(np.exp(r.normal(6) * 0.3)) @ random_rotation(6, r.substream(1))
        assert log_abs_det(a @ b)[0] == pytest.approx(log_abs_det(a)[0] + log_abs_det(b)[0], abs=1e-9)


def test_singular_values_examples():
    np.testing.assert_allclose(singular_values(np.eye(2)), [1.0, 1.0])
    np.testing.assert_allclose(singular_values(np.diag([3.0, -4.0])), [4.0, 3.0])
    phi = (1 + math.sqrt(5)) / 2
    np.testing.assert_allclose(singular_values(np.array([[1.0, 1.0], [0.0, 1.0]])), [phi, 1 / phi], rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_singular_values_match_lapack_and_are_orthogonally_invariant(d, seed):
    r = RngStream(seed)
    m = sample_gaussian_matrix(d, r)
    s = singular_values(m)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    np.testing.assert_allclose(s, np.linalg.svd(m, compute_uv=False), rtol=1e-10, atol=1e-12)
    q1, q2 = random_rotation(d, r.substream(1)), random_rotation(d, r.substream(2))
    np.testing.assert_allclose(singular_values(q1 @ m @ q2), s, atol=1e-9)
    np.testing.assert_allclose(np.sort(s**2), np.linalg.eigvalsh(m @ m.T), atol=1e-9)


def test_inv_sqrt_psd_examples():
    np.testing.assert_allclose(inv_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(inv_sqrt_psd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)
    th = math.radians(30)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    c = rot @ np.diag([4.0, 1.0]) @ rot.T
    np.testing.assert_allclose(inv_sqrt_psd(c), rot @ np.diag([0.5, 1.0]) @ rot.T, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_inv_sqrt_psd_whitens(n, seed):
    g = sample_gaussian_matrix(n, RngStream(seed), n_cols=n + 3)
    c = g @ g.T + 0.1 * np.eye(n)
    s = inv_sqrt_psd(c)
    np.testing.assert_allclose(s, s.T, atol=1e-12)
    np.testing.assert_allclose(s @ c @ s, np.eye(n), atol=1e-9)
    assert np.all(np.linalg.eigvalsh(s) > 0)


def test_inv_sqrt_psd_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        inv_sqrt_psd(np.diag([1.0, 0.0]))
    with pytest.raises(NotPositiveDefinite):
        inv_sqrt_psd(np.diag([1.0, -2.0]))
    with pytest.raises(NotPositiveDefinite):
        inv_sqrt_psd(np.diag([1.0, 1e-13]))


def test_samplers_moments():
    r = RngStream(3)
    assert np.all(np.abs(sample_gaussian_vector(3, r, 100_000).mean(axis=0)) < 0.02)
    g = sample_gaussian_vector(5, r.substream(1), 100_000)
    assert np.mean(np.sum(g * g, axis=1)) == pytest.approx(5.0, abs=0.05)
    s = sample_sphere(7, r.substream(2), 1000)
    np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-12)
    assert np.linalg.norm(sample_sphere(4, r.substream(3))) == pytest.approx(1.0, abs=1e-12)


def test_rng_stream_reproducible_and_independent():
    a = RngStream(42, 7).normal(50)
    b = RngStream(42, 7).normal(50)
    assert np.array_equal(a, b)
    c = RngStream(42, 8).normal(50)
    assert not np.array_equal(a, c)
    parent = RngStream(42)
    assert np.array_equal(parent.substream(3).normal(5), RngStream(42).substream(3).normal(5))
    assert not np.array_equal(parent.substream(3).normal(5), parent.substream(4).normal(5))
    # substreams are keyed, not drawn from the parent: consuming the parent changes nothing
    p2 = RngStream(42)
    p2.normal(1000)
    assert np.array_equal(p2.substream(3).normal(5), parent.substream(3).normal(5))


def test_rng_substreams_uncorrelated():
    p = RngStream(5)
    x = p.substream(0).normal(20000)
    y = p.substream(1).normal(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / math.sqrt(20000)


def test_random_rotation_is_special_orthogonal():
    q = random_rotation(5, RngStream(1))
    np.testing.assert_allclose(q @ q.T, np.eye(5), atol=1e-12)
    assert np.linalg.det(q) == pytest.approx(1.0)


def test_linear_map():
    t = LinearMap([[2.0, 0.0], [0.0, 3.0]])
    assert t.log_abs_det == pytest.approx(math.log(6))
    assert t.det_sign == 1
    np.testing.assert_allclose(t([1.0, 1.0]), [2.0, 3.0])
    np.testing.assert_allclose(t(np.eye(2)), [[2.0, 0.0], [0.0, 3.0]])
    np.testing.assert_allclose(t.inverse().compose(t).matrix, np.eye(2))
    assert t.scaled(2.0).log_abs_det == pytest.approx(math.log(24))
    with pytest.raises(ValueError):
        t.matrix[0, 0] = 5.0
    with pytest.raises(ValueError):
        LinearMap(np.ones((2, 3)))
    with pytest.raises(ValueError):
        LinearMap([[np.nan, 0.0], [0.0, 1.0]])
