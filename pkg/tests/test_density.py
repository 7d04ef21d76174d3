import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from measgeom.density import (DensityProfile, LocalDensity, ball_counts, calibrate_radius,
                              density_ratio, distance_matrix_for, local_density,
                              max_density_for_radius)
from measgeom.diffusion import angles_to_points, diffusion_map, pairwise_distances
from measgeom.exceptions import InvalidArgumentError, NumericalDegeneracyError
from measgeom.scene import sample_angles, torus_distance

import oracles


def test_identical_points_give_uniform_profile():
    p = local_density(np.ones((6, 2)), r=0.1)
    np.testing.assert_array_equal(p.values, np.full(6, 1 / 6))


def test_collinear_example():
    p = local_density([[0.0], [1.0], [2.0]], r=1.5)
    assert p.counts.tolist() == [2, 3, 2]
    np.testing.assert_allclose(p.values, [2 / 7, 3 / 7, 2 / 7], rtol=0, atol=1e-15)
    assert density_ratio(p) == pytest.approx(1.5)


def test_matches_double_loop_oracle(rng):
    X = rng.uniform(size=(200, 2))
    p = local_density(X, r=0.3)
    want = oracles.ball_counts_loop(X.tolist(), 0.3, math.dist)
    assert p.counts.tolist() == want


def test_torus_metric_matches_oracle(rng):
    a = rng.uniform(0, 2 * math.pi, size=150)
    p = local_density(a, r=0.2, metric_id="torus-wraparound")
    want = oracles.ball_counts_loop(a.tolist(), 0.2, lambda x, y: float(torus_distance(x, y)))
    assert p.counts.tolist() == want
    assert p.metric_id == "torus-wraparound"


def test_torus_wraps_around():
    p = local_density([0.05, 2 * math.pi - 0.05, math.pi], r=0.2, metric_id="torus-wraparound")
    assert p.counts.tolist() == [2, 2, 1]


def test_closed_ball_boundary():
    assert local_density([[0.0], [1.0]], r=1.0).counts.tolist() == [2, 2]


def test_measurement_metric_uses_image_distance(rng):
    X = rng.normal(size=(30, 12))
    a = local_density(X, r=4.0, metric_id="measurement-euclidean")
    b = local_density(None, r=4.0, metric_id="measurement-euclidean",
                      distances=pairwise_distances(X))
    np.testing.assert_array_equal(a.counts, b.counts)


def test_profile_invariants(rng):
    X = rng.normal(size=(80, 3))
    p = local_density(X, r=0.7)
    assert abs(p.values.sum() - 1.0) <= 1e-12
    assert np.all(p.values >= 1 / (80 * 80))


def test_argument_errors():
    with pytest.raises(InvalidArgumentError):
        local_density([[0.0]], r=0.0)
    with pytest.raises(InvalidArgumentError):
        local_density([[0.0]], r=-1.0)
    with pytest.raises(InvalidArgumentError):
        local_density([[0.0]], r=1.0, metric_id="manhattan")
    with pytest.raises(InvalidArgumentError):
        local_density(None, r=1.0)
    with pytest.raises(InvalidArgumentError):
        distance_matrix_for([[0.0]], "chebyshev")


def test_uniform_ratio_is_one():
    assert density_ratio(DensityProfile(1.0, np.full(4, 0.25), np.ones(4), "x")) == 1.0


def test_equispaced_circle_embedding_is_uniform():
    d = pairwise_distances(angles_to_points(sample_angles(1000)))
    e = diffusion_map(d, s=2)
    assert density_ratio(local_density(e.coords, r=0.05)) <= 1.15


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10_000))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    perm = rng.permutation(n)
    a, b = local_density(X, 0.8), local_density(X[perm], 0.8)
    np.testing.assert_array_equal(b.values, a.values[perm])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 2 * math.pi), st.booleans())
def test_isometry_invariance(seed, phi, reflect):
    X = np.random.default_rng(seed).normal(size=(60, 2))
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    if reflect:
        R = R @ np.diag([1.0, -1.0])
    # radius away from any pairwise distance so rounding cannot flip a count
    d = pairwise_distances(X)[np.triu_indices(60, 1)]
    r = 0.5 * (np.sort(d)[300] + np.sort(d)[301])
    a, b = local_density(X, r), local_density(X @ R.T + [3.0, -1.0], r)
    np.testing.assert_allclose(b.values, a.values, rtol=0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 2.0), st.floats(0.0, 2.0))
def test_counts_monotone_in_radius(seed, r, dr):
    d = pairwise_distances(np.random.default_rng(seed).normal(size=(30, 2)))
    assert np.all(ball_counts(d, r + dr) >= ball_counts(d, r))


def test_limits_are_uniform(rng):
    X = rng.normal(size=(25, 3))
    np.testing.assert_allclose(local_density(X, r=1e9).values, 1 / 25)
    np.testing.assert_allclose(local_density(X, r=1e-12).values, 1 / 25)


def test_scaled_profile():
    p = local_density([[0.0], [1.0], [2.0]], r=1.5)
    q = p.scaled(3.0)
    np.testing.assert_allclose(q.values, 3 * p.values)
    assert q.radius == p.radius and q.metric_id == p.metric_id


# -- radius calibration -------------------------------------------------------

def test_calibration_hits_target(rng):
    d = pairwise_distances(rng.normal(size=(300, 2)))
    target = max_density_for_radius(d, 0.4)
    r, achieved = calibrate_radius(d, target)
    assert abs(achieved / target - 1) <= 0.05
    assert achieved == pytest.approx(max_density_for_radius(d, r))


def test_calibration_falls_back_to_bisection():
    # a target just above the smallest grid value: no grid radius matches within rtol,
    # so the answer comes from bisecting the pairwise distances of the first bracket
    x = np.cumsum(np.random.default_rng(1).uniform(0.5, 1.5, size=60))[:, None]
    d = pairwise_distances(x)
    target = 7.0 / d.shape[0] / 5.0
    r, achieved = calibrate_radius(d, target, rtol=1e-6)
    assert abs(achieved / target - 1) <= 0.05
    assert r in d


def test_calibration_errors():
    with pytest.raises(NumericalDegeneracyError):
        calibrate_radius(np.zeros((4, 4)), 0.5)
    d = pairwise_distances(np.arange(5.0)[:, None])
    with pytest.raises(NumericalDegeneracyError):
        calibrate_radius(d, 10.0)
    with pytest.raises(InvalidArgumentError):
        calibrate_radius(np.zeros((1, 1)), 0.5)


# -- estimator ----------------------------------------------------------------

def test_estimator(rng):
    X = rng.normal(size=(20, 2))
    est = LocalDensity(radius=0.6)
    np.testing.assert_array_equal(est.fit_predict(X), local_density(X, 0.6).values)
    assert clone(est).get_params() == {"radius": 0.6, "metric": "euclidean", "metric_id": None}
    d = pairwise_distances(X)
    pre = LocalDensity(radius=0.6, metric="precomputed").fit(d)
    np.testing.assert_array_equal(pre.density_, est.density_)
    tor = LocalDensity(radius=0.1, metric="torus").fit(sample_angles(10))
    assert tor.profile_.metric_id == "torus-wraparound"
    with pytest.raises(InvalidArgumentError):
        LocalDensity(metric="cosine").fit(X)
