import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from frechetcc.errors import (
    ConvergenceError,
    DegenerateMeanError,
    GeometryError,
    InvalidInputError,
)
from frechetcc.metric_objects import (
    MetricObject,
    SpaceDescriptor,
    as_points,
    distance,
    frechet_mean,
    frechet_variance,
    geodesic_distance_sphere,
    pairwise_distances,
    quadrature_weights,
    spd_from_log_cholesky,
    spd_log_cholesky_coords,
    spd_matrix_exp,
    spd_matrix_log,
    sphere_exp,
    sphere_log,
    uniform_grid,
)
from conftest import random_sphere, random_spd

E = math.e


# ---------------------------------------------------------------- descriptors

def test_quadrature_weights_uniform_grid_equal_spacing():
    q = uniform_grid(99)
    w = quadrature_weights(q)
    np.testing.assert_allclose(w, 0.01, atol=1e-15)
    # cells tile [q_1 - h/2, q_m + h/2]
    assert w.sum() == pytest.approx(q[-1] - q[0] + 0.01, abs=1e-12)


def test_quadrature_weights_nonuniform_midpoints():
    q = np.array([0.1, 0.2, 0.5, 0.9])
    w = quadrature_weights(q)
    # edges 0.05, 0.15, 0.35, 0.7, 1.0 (clipped at 1)
    np.testing.assert_allclose(w, [0.1, 0.2, 0.35, 0.3])


def test_space_descriptor_validation():
    with pytest.raises(InvalidInputError):
        SpaceDescriptor("torus", 2)
    with pytest.raises(InvalidInputError):
        SpaceDescriptor.sphere(3, "bogus")
    with pytest.raises(InvalidInputError):
        SpaceDescriptor.wasserstein([0.5, 0.4])
    with pytest.raises(InvalidInputError):
        SpaceDescriptor.wasserstein([0.0, 0.5])
    with pytest.raises(InvalidInputError):
        SpaceDescriptor.wasserstein([0.2, 0.5], weights=[1.0])
    s = SpaceDescriptor.wasserstein([0.25, 0.5, 0.75])
    assert s.dim == 3 and len(s.weights) == 3
    assert SpaceDescriptor.sphere().metric == "chordal"
    assert SpaceDescriptor.spd(3).metric == "log_cholesky"


def test_invariants_checked():
    with pytest.raises(GeometryError):
        as_points(SpaceDescriptor.sphere(), [[1.0, 1.0, 0.0]])
    with pytest.raises(GeometryError):
        as_points(SpaceDescriptor.spd(2), [[[1.0, 0.5], [0.4, 1.0]]])
    with pytest.raises(GeometryError):
        as_points(SpaceDescriptor.spd(2), [[[1.0, 2.0], [2.0, 1.0]]])
    with pytest.raises(GeometryError):
        as_points(SpaceDescriptor.wasserstein([0.3, 0.6]), [[1.0, 0.0]])


def test_metric_object_immutable_and_hashable():
    a = MetricObject.euclidean([1.0, 2.0])
    with pytest.raises(ValueError):
        a.value[0] = 3.0
    assert a == MetricObject.euclidean([1.0, 2.0])
    assert len({a, MetricObject.euclidean([1.0, 2.0])}) == 1


# ---------------------------------------------------------------- distance

def test_distance_examples():
    e2 = SpaceDescriptor.euclidean(2)
    assert distance(e2, MetricObject.euclidean([0, 0]), MetricObject.euclidean([3, 4])) == 5.0
    s = SpaceDescriptor.sphere()
    e1 = np.array([1.0, 0, 0])
    assert distance(s, MetricObject.sphere(e1), MetricObject.sphere(-e1)) == 2.0
    spd = SpaceDescriptor.spd(3, "log_euclidean")
    assert distance(spd, MetricObject.spd(np.eye(3)), MetricObject.spd(np.eye(3))) == 0.0


def test_wasserstein_gaussian_distance_closed_form():
    q = np.arange(1, 1000) / 1000.0
    space = SpaceDescriptor.wasserstein(q)
    a = norm.ppf(q)
    d = distance(space, MetricObject.quantile(a), MetricObject.quantile(a + 1.0))
    assert abs(d - 1.0) < 1e-3
    # refining the grid moves the value towards the closed form
    q2 = np.arange(1, 10000) / 10000.0
    d2 = distance(SpaceDescriptor.wasserstein(q2), norm.ppf(q2), norm.ppf(q2) + 1.0)
    assert abs(d2 - 1.0) < abs(d - 1.0)


def test_distance_kind_mismatch():
    with pytest.raises(InvalidInputError):
        distance(SpaceDescriptor.euclidean(2), MetricObject.sphere([1, 0, 0]),
                 MetricObject.sphere([0, 1, 0]))
    with pytest.raises(InvalidInputError):
        distance(SpaceDescriptor.euclidean(2), [0, 0], [0, 0, 0])


def test_geodesic_and_log_euclidean_distance(rng):
    s = SpaceDescriptor.sphere(3, "geodesic")
    assert distance(s, [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)
    spd = SpaceDescriptor.spd(2, "log_euclidean")
    d = distance(spd, np.diag([1.0, 1.0]), np.diag([E**2, E]))
    assert d == pytest.approx(math.sqrt(5.0))
    A, B = random_spd(rng, 3), random_spd(rng, 3)
    ref = np.linalg.norm(spd_matrix_log(A) - spd_matrix_log(B))
    assert distance(SpaceDescriptor.spd(3, "log_euclidean"), A, B) == pytest.approx(ref)


def _sample(space, rng, n):
    if space.kind == "euclidean":
        return rng.standard_normal((n, space.dim))
    if space.kind == "sphere":
        return random_sphere(rng, n, space.dim)
    if space.kind == "spd":
        return random_spd(rng, space.dim, size=n)
    base = norm.ppf(space.grid_array)
    return rng.normal(size=(n, 1)) + np.exp(0.3 * rng.normal(size=(n, 1))) * base


SPACES = [
    SpaceDescriptor.euclidean(3),
    SpaceDescriptor.sphere(3, "chordal"),
    SpaceDescriptor.sphere(3, "geodesic"),
    SpaceDescriptor.spd(3, "log_cholesky"),
    SpaceDescriptor.spd(3, "log_euclidean"),
    SpaceDescriptor.wasserstein(uniform_grid(25)),
]


@pytest.mark.parametrize("space", SPACES, ids=lambda s: f"{s.kind}-{s.metric}")
def test_metric_axioms_on_sampled_triples(space, rng):
    pts = _sample(space, rng, 300)
    D = pairwise_distances(space, pts)
    np.testing.assert_allclose(D, D.T, atol=1e-12)
    assert np.all(np.abs(np.diag(D)) < 1e-7)
    idx = rng.integers(0, 300, size=(1000, 3))
    a, b, c = idx.T
    assert np.all(D[a, c] <= D[a, b] + D[b, c] + 1e-10)
    # zero iff equal
    off = D[~np.eye(300, dtype=bool)]
    assert np.all(off > 0)


# ---------------------------------------------------------------- means

def test_frechet_mean_examples():
    e2 = SpaceDescriptor.euclidean(2)
    fs = frechet_mean(e2, [[0, 0], [2, 0]])
    np.testing.assert_allclose(fs.mean.value, [1, 0])
    assert fs.variance == pytest.approx(1.0)
    assert fs.iterations == 0 and fs.gradient_norm == 0.0

    s = SpaceDescriptor.sphere()
    fs = frechet_mean(s, [[1, 0, 0], [0, 1, 0]])
    np.testing.assert_allclose(fs.mean.value, [1 / math.sqrt(2), 1 / math.sqrt(2), 0])

    spd = SpaceDescriptor.spd(2, "log_euclidean")
    fs = frechet_mean(spd, [np.eye(2), np.diag([E**2, E**2])])
    np.testing.assert_allclose(fs.mean.value, np.diag([E, E]), atol=1e-12)
    # scalar geometric-mean oracle
    assert fs.mean.value[0, 0] == pytest.approx(math.sqrt(1.0 * E**2))


def test_frechet_mean_log_cholesky_closed_form(rng):
    A = random_spd(rng, 3, size=6)
    space = SpaceDescriptor.spd(3)
    fs = frechet_mean(space, A)
    np.testing.assert_allclose(
        spd_log_cholesky_coords(fs.mean.value), spd_log_cholesky_coords(A).mean(axis=0),
        atol=1e-10,
    )


def test_weighted_means():
    e1 = SpaceDescriptor.euclidean(1)
    fs = frechet_mean(e1, [[0.0], [4.0]], weights=[3, 1])
    assert fs.mean.value[0] == pytest.approx(1.0)
    assert fs.variance == pytest.approx(0.75 * 1 + 0.25 * 9)
    with pytest.raises(InvalidInputError):
        frechet_mean(e1, [[0.0], [1.0]], weights=[0, 0])
    with pytest.raises(InvalidInputError):
        frechet_mean(e1, [[0.0], [1.0]], weights=[-1, 2])
    with pytest.raises(InvalidInputError):
        frechet_mean(e1, np.empty((0, 1)))


def test_chordal_mean_degenerate():
    with pytest.raises(DegenerateMeanError):
        frechet_mean(SpaceDescriptor.sphere(), [[1, 0, 0], [-1, 0, 0]])


def test_karcher_mean(rng):
    s = SpaceDescriptor.sphere(3, "geodesic")
    base = np.array([0.0, 0.0, 1.0])
    pts = sphere_exp(base, 0.3 * np.c_[rng.standard_normal((50, 2)), np.zeros(50)])
    fs = frechet_mean(s, pts)
    assert fs.gradient_norm < 1e-10 and fs.iterations >= 1
    # first-order condition: mean of logs vanishes
    assert np.linalg.norm(sphere_log(fs.mean.value, pts).mean(axis=0)) < 1e-10
    # the variance is the mean squared geodesic distance
    d = geodesic_distance_sphere(pts, fs.mean.value)
    assert fs.variance == pytest.approx(np.mean(d**2), rel=1e-12)


def test_karcher_nonconvergence_reports_state():
    # four points spread on a great circle plus poles: no unique minimiser
    s = SpaceDescriptor.sphere(3, "geodesic")
    pts = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0.0]])
    pts = np.vstack([pts, [[0, 0, 1.0]], [[0, 0, -1.0]]])
    try:
        fs = frechet_mean(s, pts)
    except ConvergenceError as exc:
        assert exc.iterations == 200 and exc.gradient_norm >= 1e-10
    except GeometryError:
        pass  # the iteration may land antipodal to a point
    else:
        assert fs.gradient_norm < 1e-10


@pytest.mark.parametrize("space", SPACES, ids=lambda s: f"{s.kind}-{s.metric}")
@settings(max_examples=500)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12))
def test_frechet_mean_beats_sample_candidates(space, seed, n):
    rng = np.random.default_rng(seed)
    pts = _sample(space, rng, n)
    if space.kind == "sphere":
        # keep samples in a hemisphere so the mean is well defined
        pts[:, 2] = np.abs(pts[:, 2]) + 0.5
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    fs = frechet_mean(space, pts)
    var_check = frechet_variance(space, pts, fs.mean.value)
    assert fs.variance == pytest.approx(var_check, rel=1e-8, abs=1e-12)
    for cand in pts:
        assert fs.variance <= frechet_variance(space, pts, cand) + 1e-10
    if space.kind == "wasserstein":
        assert np.all(np.diff(fs.mean.value) >= 0)


def test_variance_zero_iff_constant(rng):
    for space in SPACES:
        p = _sample(space, rng, 1)
        pts = np.repeat(p, 4, axis=0)
        assert frechet_mean(space, pts).variance < 1e-20
        pts2 = _sample(space, rng, 4)
        assert frechet_mean(space, pts2).variance > 0


# ---------------------------------------------------------------- sphere maps

def test_sphere_log_examples():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    np.testing.assert_array_equal(sphere_log(e1, e1), np.zeros(3))
    v = sphere_log(e1, e2)
    np.testing.assert_allclose(v, [0, math.pi / 2, 0], atol=1e-15)
    with pytest.raises(GeometryError):
        sphere_log(e1, -e1)


def test_sphere_log_exp_round_trip(rng):
    base = random_sphere(rng, 200)
    y = random_sphere(rng, 200)
    keep = np.sum(base * y, axis=1) > -0.99
    for b, t in zip(base[keep], y[keep]):
        v = sphere_log(b, t)
        assert abs(v @ b) < 1e-12  # tangent
        assert np.linalg.norm(v) == pytest.approx(geodesic_distance_sphere(b, t), abs=1e-12)
        np.testing.assert_allclose(sphere_exp(b, v), t, atol=1e-10)


# ---------------------------------------------------------------- SPD maps

def test_log_cholesky_examples():
    np.testing.assert_array_equal(spd_log_cholesky_coords(np.eye(3)), np.zeros(6))
    c = spd_log_cholesky_coords(np.diag([E**2, 1.0]))
    np.testing.assert_allclose(c, [0.0, 1.0, 0.0], atol=1e-15)
    with pytest.raises(GeometryError):
        spd_log_cholesky_coords(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_log_cholesky_layout():
    L = np.array([[2.0, 0, 0], [0.5, 1.0, 0], [-0.3, 0.7, 3.0]])
    c = spd_log_cholesky_coords(L @ L.T)
    np.testing.assert_allclose(c, [0.5, -0.3, 0.7, math.log(2), 0.0, math.log(3)], atol=1e-12)


def test_log_cholesky_round_trip_and_isometry(rng):
    A = random_spd(rng, 4, size=100)
    c = spd_log_cholesky_coords(A)
    back = spd_from_log_cholesky(c)
    assert np.max(np.linalg.norm(back - A, axis=(1, 2))) < 1e-10
    space = SpaceDescriptor.spd(4)
    D = pairwise_distances(space, A)
    np.testing.assert_allclose(D, np.linalg.norm(c[:, None] - c[None], axis=2), atol=1e-12)


def test_matrix_log_examples(rng):
    np.testing.assert_allclose(spd_matrix_log(np.eye(3)), np.zeros((3, 3)), atol=1e-15)
    np.testing.assert_allclose(spd_matrix_log(np.diag([E, E**3])), np.diag([1.0, 3.0]),
                               atol=1e-13)
    A = random_spd(rng, 5, size=50)
    np.testing.assert_allclose(spd_matrix_exp(spd_matrix_log(A)), A, atol=1e-9)
