"""Baseline dependence statistics: Pearson, Chatterjee's xi, distance covariance."""

import numpy as np

from .bootstrap import permutation_test
from .errors import DegenerateError, InvalidInputError
from .metric_objects import as_points, pairwise_distances


def _pair(x, y, min_n=2):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise InvalidInputError(f"x has {x.size} values, y has {y.size}")
    if x.size < min_n:
        raise InvalidInputError(f"need at least {min_n} observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("non-finite values")
    return x, y


def pearson_r(x, y):
    """Product-moment correlation."""
    x, y = _pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateError("Pearson correlation undefined for a constant sample")
    r = (xc @ yc) / (sx * sy)
    return float(np.clip(r, -1.0, 1.0))


def chatterjee_xi(x, y, seed=0):
    """Chatterjee's rank correlation ``xi_n(x, y)`` (y as a function of x).

    Ties in ``x`` are broken by a seeded random order; ties in ``y`` use the
    max-rank convention together with the tie-corrected denominator, which
    reduces to ``n^2 - 1`` when there are no ties.
    """
    x, y = _pair(x, y)
    n = x.size
    jitter = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    order = np.lexsort((jitter, x))
    ys = y[order]
    sorted_y = np.sort(y)
    r = np.searchsorted(sorted_y, ys, side="right")  # #{j: y_j <= y_(i)}
    l = n - np.searchsorted(sorted_y, ys, side="left")  # #{j: y_j >= y_(i)}
    denom = 2.0 * np.sum(l * (n - l))
    if denom == 0.0:
        raise DegenerateError("Chatterjee coefficient undefined for constant y")
    return float(1.0 - n * np.sum(np.abs(np.diff(r))) / denom)


def double_centered(D):
    """Double-centred distance matrix ``A_ij - A_i. - A_.j + A_..``."""
    row = D.mean(axis=1, keepdims=True)
    col = D.mean(axis=0, keepdims=True)
    return D - row - col + D.mean()


def _dcov_from_centered(A, Bc):
    return max(float(np.mean(A * Bc)), 0.0)


def energy_dcov_stat(X, Y, space_X, space_Y):
    """Squared distance covariance (V-statistic) under each space's metric."""
    ax = as_points(space_X, X, validate=False)
    ay = as_points(space_Y, Y, validate=False)
    if ax.shape[0] != ay.shape[0]:
        raise InvalidInputError("X and Y differ in length")
    if ax.shape[0] < 4:
        raise InvalidInputError("need at least 4 observations")
    A = double_centered(pairwise_distances(space_X, ax))
    Bc = double_centered(pairwise_distances(space_Y, ay))
    return _dcov_from_centered(A, Bc)


def energy_dcov_test(X, Y, space_X, space_Y, B=500, seed=0):
    """Permutation test of independence based on :func:`energy_dcov_stat`.

    Both distance matrices are computed once; permuting ``Y`` permutes rows
    and columns of its double-centred matrix.
    """
    ax = as_points(space_X, X, validate=False)
    ay = as_points(space_Y, Y, validate=False)
    n = ax.shape[0]
    if ay.shape[0] != n:
        raise InvalidInputError("X and Y differ in length")
    if n < 4:
        raise InvalidInputError("need at least 4 observations")
    A = double_centered(pairwise_distances(space_X, ax))
    Bc = double_centered(pairwise_distances(space_Y, ay))

    def stat(_, idx):
        return _dcov_from_centered(A, Bc[np.ix_(idx, idx)])

    return permutation_test(stat, np.arange(n), np.arange(n), B, seed, method="energy_dcov")


def pearson_test(x, y, B=500, seed=0):
    """Two-sided permutation test with ``|r|`` as statistic."""
    x, y = _pair(x, y)
    return permutation_test(
        lambda a, b: abs(pearson_r(a, b)), x, y, B, seed, method="pearson"
    )


def chatterjee_test(x, y, B=500, seed=0):
    """One-sided permutation test with ``xi_n`` as statistic."""
    x, y = _pair(x, y)
    return permutation_test(
        lambda a, b: chatterjee_xi(a, b, seed), x, y, B, seed, method="chatterjee"
    )
