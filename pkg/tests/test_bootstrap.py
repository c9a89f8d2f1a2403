import json

import numpy as np
import pytest
from scipy.stats import norm

from frechetcc.bootstrap import (
    MultiplierLaw,
    NormalizationSpec,
    between_cell_statistic,
    mix64,
    p_value_from,
    permutation_test,
    plugin_normalization,
    replicate_rng,
    wild_bootstrap_test,
)
from frechetcc.baselines import pearson_r
from frechetcc.embeddings import embed_responses, from_vectors
from frechetcc.errors import DegenerateResponseError, InvalidInputError
from frechetcc.fcc import fcc_estimate
from frechetcc.metric_objects import SpaceDescriptor, sphere_exp, uniform_grid
from frechetcc.partition import from_labels, quantile_bins
from conftest import random_spd

E1 = SpaceDescriptor.euclidean(1)


def test_mix64_matches_splitmix64_reference():
    # published SplitMix64 outputs for state 0
    assert mix64(0, 0) == 0xE220A8397B1DCDAF
    assert mix64(0, 1) == 0x6E789E6AA1B965F4
    assert mix64(0, 2) == 0x06C45D188009454F
    assert mix64(12345, 7) != mix64(12345, 8)


@pytest.mark.parametrize("kind", ["rademacher", "gaussian", "mammen"])
def test_multiplier_moments(kind):
    law = MultiplierLaw(kind)
    x = law.draw(replicate_rng(42, 0), 100_000)
    se_mean = x.std() / np.sqrt(x.size)
    assert abs(x.mean()) < 3 * se_mean
    se_var = np.sqrt(np.var(x**2) / x.size)
    assert abs(np.mean(x**2) - 1.0) <= 3 * se_var + 1e-12
    with pytest.raises(InvalidInputError):
        MultiplierLaw("uniform")


def test_between_cell_examples(rng):
    part = from_labels(np.repeat([0, 1], 5))
    zero = from_vectors(np.zeros((10, 2)))
    assert between_cell_statistic(zero, part) == 0.0
    c = 0.7
    z = from_vectors(np.r_[np.full(5, c), np.full(5, -c)])
    assert between_cell_statistic(z, part) == pytest.approx(10 * c**2, abs=1e-12)
    y = rng.standard_normal((60, 3))
    labels = np.arange(60) % 4
    emb = from_vectors(y)
    sb = sum(
        (labels == g).sum() * np.sum((y[labels == g].mean(0) - y.mean(0)) ** 2)
        for g in range(4)
    )
    assert between_cell_statistic(emb, from_labels(labels)) == pytest.approx(sb, abs=1e-10)


def test_normalization_spec_validation():
    with pytest.raises(InvalidInputError):
        NormalizationSpec("plugin_hessian", (np.diag([1.0, -1.0]),), np.eye(2))
    with pytest.raises(InvalidInputError):
        NormalizationSpec("plugin_hessian", (np.array([[1.0, 0.5], [0.0, 1.0]]),), np.eye(2))
    with pytest.raises(InvalidInputError):
        NormalizationSpec("identity", (np.eye(2),), np.eye(2))
    with pytest.raises(InvalidInputError):
        NormalizationSpec("whitening")


def test_plugin_equals_identity_in_flat_case(rng):
    y = rng.standard_normal((40, 2))
    part = from_labels(np.arange(40) % 4)
    space = SpaceDescriptor.euclidean(2)
    a = wild_bootstrap_test(None, y, space, part, B=50, seed=1)
    b = wild_bootstrap_test(None, y, space, part, B=50, norm="plugin", seed=1)
    np.testing.assert_allclose(a.replicates, b.replicates, atol=1e-12)
    assert b.normalization == "plugin_hessian"


def test_plugin_on_sphere_runs(rng):
    base = np.array([0.0, 0.0, 1.0])
    y = sphere_exp(base, 0.4 * np.c_[rng.standard_normal((60, 2)), np.zeros(60)])
    part = from_labels(np.arange(60) % 3)
    spec = plugin_normalization(SpaceDescriptor.sphere(), y, part)
    for h in spec.cell_matrices:
        assert np.all(np.linalg.eigvalsh(h) > 0)
    res = wild_bootstrap_test(None, y, SpaceDescriptor.sphere(), part, B=100, norm="plugin")
    assert 0 < res.p_value <= 1
    # near the base point the plug-in Hessian is close to the flat one
    near = sphere_exp(base, 1e-4 * np.c_[rng.standard_normal((30, 2)), np.zeros(30)])
    spec = plugin_normalization(SpaceDescriptor.sphere(), near, from_labels(np.arange(30) % 2))
    np.testing.assert_allclose(spec.global_matrix, np.eye(3), atol=1e-6)


def test_p_value_formula():
    assert p_value_from(1.0, [0.5, 1.0, 2.0]) == 3 / 4
    assert p_value_from(5.0, [0.5, 1.0]) == 1 / 3


def _flat_cases(rng):
    n = 40
    labels = np.arange(n) % 5
    q = uniform_grid(20)
    yield SpaceDescriptor.euclidean(2), rng.standard_normal((n, 2)), labels
    yield (SpaceDescriptor.wasserstein(q),
           rng.normal(size=(n, 1)) + np.exp(rng.normal(size=(n, 1))) * norm.ppf(q), labels)
    yield SpaceDescriptor.spd(3), random_spd(rng, 3, size=n), labels
    yield SpaceDescriptor.spd(3, "log_euclidean"), random_spd(rng, 3, size=n), labels


def test_identity_normalisation_t_obs_equals_n_rho(rng):
    for space, y, labels in _flat_cases(rng):
        part = from_labels(labels)
        res = wild_bootstrap_test(None, y, space, part, B=20, seed=3)
        est = fcc_estimate(None, y, space, part)
        assert abs(res.statistic_obs - len(y) * est.rho_hat) < 1e-10
        assert res.n_rho_hat == pytest.approx(len(y) * est.rho_hat)


def test_result_record_and_determinism(rng):
    y = rng.standard_normal(30)
    part = from_labels(np.arange(30) % 3)
    a = wild_bootstrap_test(None, y, E1, part, B=200, seed=9)
    b = wild_bootstrap_test(None, y, E1, part, B=200, seed=9)
    assert a.to_json() == b.to_json()
    assert a.p_value == (1 + np.sum(a.replicates >= a.statistic_obs)) / 201
    assert a.p_value >= 1 / 201
    d = json.loads(a.to_json(include_replicates=False))
    assert {"T_obs", "p_value", "B", "seed", "n_rho_hat", "multiplier"} <= set(d)
    # replicate b depends only on (seed, b): a shorter run is a prefix
    short = wild_bootstrap_test(None, y, E1, part, B=50, seed=9)
    np.testing.assert_array_equal(short.replicates, a.replicates[:50])


def test_b_equal_one(rng):
    y = rng.standard_normal(20)
    part = from_labels(np.arange(20) % 2)
    ps = {wild_bootstrap_test(None, y, E1, part, B=1, seed=s).p_value for s in range(20)}
    assert ps <= {0.5, 1.0}


def test_bootstrap_errors(rng):
    part = from_labels(np.arange(10) % 2)
    with pytest.raises(InvalidInputError):
        wild_bootstrap_test(None, rng.standard_normal(10), E1, part, B=0)
    with pytest.raises(DegenerateResponseError):
        wild_bootstrap_test(None, np.ones(10), E1, part, B=10)
    with pytest.raises(InvalidInputError):
        wild_bootstrap_test(None, rng.standard_normal(10), E1, part, norm="whiten")


def test_null_calibration_gaussian():
    rejections = 0
    for r in range(500):
        g = np.random.default_rng(mix64(31, r))
        x = g.standard_normal(200)
        y = g.standard_normal(200)
        res = wild_bootstrap_test(None, y, E1, quantile_bins(x, 5), B=500, seed=r)
        rejections += res.p_value <= 0.05
    assert 0.02 <= rejections / 500 <= 0.09


def test_permutation_examples(rng):
    x = rng.standard_normal(30)
    y = rng.standard_normal(30)
    assert permutation_test(lambda a, b: 1.0, x, y, B=50).p_value == 1.0
    ps = {permutation_test(lambda a, b: pearson_r(a, b), x, y, B=1, seed=s).p_value
          for s in range(10)}
    assert ps <= {0.5, 1.0}
    x = rng.standard_normal(100)
    y = x + 0.1 * rng.standard_normal(100)
    res = permutation_test(lambda a, b: abs(pearson_r(a, b)), x, y, B=199, seed=4)
    assert res.p_value == 1 / 200
    objs = list(y)
    res2 = permutation_test(lambda a, b: abs(pearson_r(a, np.array(b))), x, objs, B=20, seed=4)
    assert res2.p_value == 1 / 21
    with pytest.raises(InvalidInputError):
        permutation_test(lambda a, b: 0.0, x[:5], y, B=5)
