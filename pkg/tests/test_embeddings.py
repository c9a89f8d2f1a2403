import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from frechetcc.embeddings import embed_responses, embedding_dimension
from frechetcc.errors import GeometryError
from frechetcc.metric_objects import (
    SpaceDescriptor,
    geodesic_distance_sphere,
    pairwise_distances,
    sphere_exp,
    uniform_grid,
)
from conftest import random_spd


def test_euclidean_example():
    emb = embed_responses(SpaceDescriptor.euclidean(2), [[1, 2], [3, 4]])
    np.testing.assert_allclose(emb.global_mean, [2, 3])
    np.testing.assert_allclose(emb.centered, [[-1, -1], [1, 1]])
    assert emb.n == 2 and emb.dim == 2


def test_embedding_dimension_examples():
    assert embedding_dimension(SpaceDescriptor.spd(4)) == 10
    assert embedding_dimension(SpaceDescriptor.wasserstein(uniform_grid(99))) == 99
    assert embedding_dimension(SpaceDescriptor.euclidean(3)) == 3


def test_spd_identity_sample_centres_to_zero():
    emb = embed_responses(SpaceDescriptor.spd(3), np.stack([np.eye(3)] * 5))
    assert np.all(emb.centered == 0)


def test_sphere_base_point_embeds_to_zero(rng):
    base = np.array([1.0, 0.0, 0.0])
    tang = 0.1 * np.c_[np.zeros(30), rng.standard_normal((30, 2))]
    pts = sphere_exp(base, tang)
    emb = embed_responses(SpaceDescriptor.sphere(), pts)
    mu = emb.base_point.value
    # embedding the base point itself gives the zero vector
    emb2 = embed_responses(SpaceDescriptor.sphere(), np.vstack([pts, mu]))
    assert emb2.base_point == emb.base_point or np.allclose(emb2.base_point.value, mu)
    z = emb2.vectors[-1]
    assert np.linalg.norm(z) < 1e-7
    # norms equal geodesic distances to the base point
    np.testing.assert_allclose(
        np.linalg.norm(emb.vectors, axis=1), geodesic_distance_sphere(pts, mu), atol=1e-9
    )


def test_sphere_antipodal_names_index():
    pts = np.array([[1.0, 0, 0]] * 3 + [[-1.0, 0, 0]])
    with pytest.raises(GeometryError, match="3"):
        embed_responses(SpaceDescriptor.sphere(), pts)


def _flat_sample(kind, rng, n):
    if kind == "euclidean":
        return SpaceDescriptor.euclidean(4), rng.standard_normal((n, 4))
    if kind == "wasserstein":
        q = uniform_grid(30)
        return SpaceDescriptor.wasserstein(q), rng.normal(size=(n, 1)) + np.exp(
            rng.normal(size=(n, 1))) * norm.ppf(q)
    if kind == "log_cholesky":
        return SpaceDescriptor.spd(3), random_spd(rng, 3, size=n)
    return SpaceDescriptor.spd(3, "log_euclidean"), random_spd(rng, 3, size=n)


@pytest.mark.parametrize("kind", ["euclidean", "wasserstein", "log_cholesky", "log_euclidean"])
@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_flat_isometry_and_centering(kind, seed):
    rng = np.random.default_rng(seed)
    space, Y = _flat_sample(kind, rng, 8)
    emb = embed_responses(space, Y)
    Z = emb.vectors
    DZ = np.linalg.norm(Z[:, None] - Z[None], axis=2)
    np.testing.assert_allclose(DZ, pairwise_distances(space, Y), atol=1e-9)
    assert np.max(np.abs(emb.centered.mean(axis=0))) < 1e-10
    again = emb.recentered()
    np.testing.assert_allclose(again.centered, emb.centered, atol=1e-12)
