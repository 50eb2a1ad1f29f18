import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from promal.errors import DuplicatePointsWarning
from promal.prior import PriorSpec, build_location_matrix, identity_prior, median_bandwidth, resolve_location


def test_coincident_points_warn():
    with pytest.warns(DuplicatePointsWarning):
        f = build_location_matrix([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]], bandwidth=1.0)
    np.testing.assert_array_equal(f, np.ones((2, 2)))


def test_huge_bandwidth_tends_to_ones(rng):
    f = build_location_matrix(rng.uniform(size=(10, 3)), bandwidth=1e6)
    assert f.min() >= 0.999


def test_line_points_kernel_value():
    f = build_location_matrix([[0.0], [1.0], [2.0]], bandwidth=1.0)
    # exp(-|0-2|^2 / 2)
    assert f[0, 2] == pytest.approx(math.exp(-2.0), abs=1e-15)
    assert f[0, 2] == pytest.approx(0.1353, abs=5e-5)
    assert f[0, 1] == pytest.approx(math.exp(-0.5), abs=1e-15)


@pytest.mark.parametrize("m", [1, 3])
def test_identity_prior(m):
    np.testing.assert_array_equal(identity_prior(m), np.eye(m))


def test_median_bandwidth_default():
    pts = np.array([[0.0], [1.0], [3.0]])
    assert median_bandwidth(pts) == 2.0
    np.testing.assert_allclose(build_location_matrix(pts), build_location_matrix(pts, 2.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 40), st.floats(0.05, 5.0))
def test_kernel_properties(seed, m, h):
    pts = np.random.default_rng(seed).uniform(size=(m, 3))
    f = build_location_matrix(pts, h)
    assert np.max(np.abs(f - f.T)) <= 1e-12
    np.testing.assert_array_equal(np.diag(f), 1.0)
    assert np.all((f > 0) & (f <= 1))


def test_kernel_monotone_in_distance():
    pts = np.array([[0.0, 0, 0], [0.5, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
    f = build_location_matrix(pts, 1.0)
    assert f[0, 1] > f[0, 2] > f[0, 3]


def test_kernel_full_rank_for_distinct_points(rng):
    f = build_location_matrix(rng.uniform(size=(30, 3)))
    assert np.isfinite(np.linalg.cond(f))
    assert np.linalg.matrix_rank(f) == 30


def test_prior_spec_validation():
    with pytest.raises(ValueError):
        PriorSpec(k=-1)
    with pytest.raises(ValueError):
        PriorSpec(kind="similarity_gaussian", bandwidth=0.0)
    with pytest.raises(ValueError):
        PriorSpec(kind="user_supplied")
    with pytest.raises(ValueError):
        PriorSpec(kind="user_supplied", matrix=np.ones((2, 3)))


def test_resolve_location(rng):
    assert np.array_equal(resolve_location(PriorSpec(), 3), np.eye(3))
    user = np.diag([1.0, 2.0])
    assert np.array_equal(resolve_location(PriorSpec(kind="user_supplied", matrix=user, k=1), 2), user)
    with pytest.raises(ValueError):
        resolve_location(PriorSpec(kind="similarity_gaussian", k=1), 3)
    with pytest.raises(ValueError):
        resolve_location(PriorSpec(kind="similarity_gaussian", k=1), 3, rng.uniform(size=(4, 3)))
