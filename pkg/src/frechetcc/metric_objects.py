"""Metric-space values, distances and Fréchet means.

Four geometries are supported:

* ``euclidean``  -- vectors in R^d with the Euclidean norm;
* ``sphere``     -- unit vectors in R^d, chordal (ambient) or geodesic metric;
* ``spd``        -- p x p symmetric positive-definite matrices under the
  Log-Cholesky or the log-Euclidean metric;
* ``wasserstein`` -- one-dimensional distributions stored as quantile
  functions on a fixed probability grid, with the 2-Wasserstein metric
  computed by quadrature on that grid.

Samples are handled as stacked numpy arrays: shape ``(n, d)`` for vectors
and quantile functions and ``(n, p, p)`` for SPD matrices.  Single values can
be wrapped in :class:`MetricObject`, and any sequence of those is accepted
wherever a sample is expected.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    ConvergenceError,
    DegenerateMeanError,
    GeometryError,
    InvalidInputError,
)
from .linalg import cholesky, spd_log, sym_exp

KINDS = ("euclidean", "sphere", "spd", "wasserstein")
_DEFAULT_METRIC = {
    "euclidean": "euclidean",
    "sphere": "chordal",
    "spd": "log_cholesky",
    "wasserstein": "l2_quantile",
}
_METRICS = {
    "euclidean": ("euclidean",),
    "sphere": ("chordal", "geodesic"),
    "spd": ("log_cholesky", "log_euclidean"),
    "wasserstein": ("l2_quantile",),
}

UNIT_TOL = 1e-10
SYM_TOL = 1e-10
ANTIPODAL_TOL = 1e-12
KARCHER_TOL = 1e-10
KARCHER_MAX_ITER = 200


def quadrature_weights(grid):
    """Midpoint-rule integration weights for a probability grid.

    Each level sits at the centre of its cell: interior cell edges are the
    midpoints between neighbours and the outer cells extend half a spacing
    beyond the first and last levels (clipped to [0, 1]).  On a uniform
    grid every weight equals the grid spacing.
    """
    q = np.asarray(grid, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise InvalidInputError("grid must be a non-empty 1-D sequence")
    if q.size == 1:
        return np.ones(1)
    mid = 0.5 * (q[1:] + q[:-1])
    lo = max(0.0, q[0] - 0.5 * (q[1] - q[0]))
    hi = min(1.0, q[-1] + 0.5 * (q[-1] - q[-2]))
    edges = np.concatenate([[lo], mid, [hi]])
    return np.diff(edges)


def uniform_grid(m, lo=0.01, hi=0.99):
    """``m`` equally spaced probability levels from ``lo`` to ``hi``."""
    return np.linspace(lo, hi, m)


@dataclass(frozen=True)
class SpaceDescriptor:
    """Geometry of a response or predictor space.

    ``dim`` is the ambient vector length for euclidean and sphere spaces,
    the matrix size ``p`` for SPD spaces and the grid length for
    Wasserstein spaces.
    """

    kind: str
    dim: int
    metric: str = ""
    grid: Optional[tuple] = None
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown space kind {self.kind!r}")
        metric = self.metric or _DEFAULT_METRIC[self.kind]
        if metric not in _METRICS[self.kind]:
            raise InvalidInputError(
                f"metric {metric!r} not available for {self.kind} spaces"
            )
        object.__setattr__(self, "metric", metric)
        if int(self.dim) < 1:
            raise InvalidInputError("dim must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind == "sphere" and self.dim < 2:
            raise InvalidInputError("sphere needs ambient dimension >= 2")
        if self.kind == "wasserstein":
            if self.grid is None:
                raise InvalidInputError("wasserstein space needs a grid")
            q = np.asarray(self.grid, dtype=float)
            if q.ndim != 1 or np.any(q <= 0) or np.any(q >= 1):
                raise InvalidInputError("grid levels must lie in (0, 1)")
            if q.size > 1 and np.any(np.diff(q) <= 0):
                raise InvalidInputError("grid must be strictly increasing")
            w = quadrature_weights(q) if self.weights is None else np.asarray(
                self.weights, dtype=float
            )
            if w.shape != q.shape or np.any(w <= 0):
                raise InvalidInputError("weights must be positive, one per grid level")
            object.__setattr__(self, "grid", tuple(q.tolist()))
            object.__setattr__(self, "weights", tuple(w.tolist()))
            object.__setattr__(self, "dim", q.size)
        elif self.grid is not None or self.weights is not None:
            raise InvalidInputError("grid/weights only apply to wasserstein spaces")

    @classmethod
    def euclidean(cls, d=1):
        return cls("euclidean", d)

    @classmethod
    def sphere(cls, d=3, metric="chordal"):
        return cls("sphere", d, metric)

    @classmethod
    def spd(cls, p, metric="log_cholesky"):
        return cls("spd", p, metric)

    @classmethod
    def wasserstein(cls, grid, weights=None):
        grid = tuple(np.asarray(grid, dtype=float).tolist())
        w = None if weights is None else tuple(np.asarray(weights, float).tolist())
        return cls("wasserstein", len(grid), grid=grid, weights=w)

    @property
    def grid_array(self):
        return np.asarray(self.grid, dtype=float)

    @property
    def weights_array(self):
        return np.asarray(self.weights, dtype=float)

    @property
    def point_shape(self):
        if self.kind == "spd":
            return (self.dim, self.dim)
        return (self.dim,)

    @property
    def is_flat(self):
        """True when the metric is a Euclidean norm in some coordinates."""
        return not (self.kind == "sphere" and self.metric == "geodesic")


@dataclass(frozen=True)
class MetricObject:
    """A single value in one of the supported spaces."""

    kind: str
    value: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown object kind {self.kind!r}")
        v = np.array(self.value, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "value", v)

    @classmethod
    def euclidean(cls, values):
        return cls("euclidean", np.atleast_1d(np.asarray(values, float)))

    @classmethod
    def sphere(cls, coords):
        return cls("sphere", np.asarray(coords, float))

    @classmethod
    def spd(cls, entries):
        return cls("spd", np.asarray(entries, float))

    @classmethod
    def quantile(cls, values):
        return cls("wasserstein", np.asarray(values, float))

    def __eq__(self, other):
        if not isinstance(other, MetricObject):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.value, other.value)

    def __hash__(self):
        return hash((self.kind, self.value.tobytes()))


@dataclass(frozen=True)
class FrechetSummary:
    """Result of :func:`frechet_mean`."""

    mean: MetricObject
    variance: float
    iterations: int = 0
    gradient_norm: float = 0.0


# ----------------------------------------------------------------------
# sample handling

def as_points(space, points, validate=True):
    """Stack ``points`` into an array shaped ``(n,) + space.point_shape``.

    Accepts an array, a single :class:`MetricObject` or a sequence of them.
    """
    if isinstance(points, MetricObject):
        points = [points]
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        points = list(points)
        if points and isinstance(points[0], MetricObject):
            for i, obj in enumerate(points):
                if obj.kind != space.kind:
                    raise InvalidInputError(
                        f"object {i} is {obj.kind}, space is {space.kind}"
                    )
            arr = np.stack([obj.value for obj in points]) if points else np.empty(0)
        else:
            arr = np.asarray(points, dtype=float)
    shape = space.point_shape
    if space.kind == "euclidean" and space.dim == 1 and arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim == len(shape):
        arr = arr[None]
    if arr.shape[1:] != shape:
        raise InvalidInputError(
            f"expected points of shape {shape} for {space.kind}, got {arr.shape[1:]}"
        )
    if validate:
        check_points(space, arr)
    return arr


def check_points(space, arr):
    """Raise :class:`GeometryError` if any point violates its space."""
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite values in sample")
    if space.kind == "sphere":
        norms = np.linalg.norm(arr, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
        if bad.size:
            raise GeometryError(f"sphere point {bad[0]} does not have unit norm")
    elif space.kind == "spd":
        asym = np.max(np.abs(arr - np.swapaxes(arr, 1, 2)), axis=(1, 2), initial=0.0)
        scale = np.maximum(1.0, np.max(np.abs(arr), axis=(1, 2), initial=0.0))
        bad = np.flatnonzero(asym > SYM_TOL * scale)
        if bad.size:
            raise GeometryError(f"SPD point {bad[0]} is not symmetric")
        cholesky(arr)
    elif space.kind == "wasserstein":
        if space.dim > 1:
            bad = np.flatnonzero(np.any(np.diff(arr, axis=1) < 0, axis=1))
            if bad.size:
                raise GeometryError(f"quantile function {bad[0]} is decreasing")


def to_objects(space, arr):
    """Unstack an array sample into a list of :class:`MetricObject`."""
    return [MetricObject(space.kind, a) for a in np.asarray(arr)]


def _check_same_space(space, obj):
    if isinstance(obj, MetricObject):
        if obj.kind != space.kind:
            raise InvalidInputError(f"object is {obj.kind}, space is {space.kind}")
        v = obj.value
    else:
        v = np.asarray(obj, dtype=float)
    if space.kind == "euclidean" and space.dim == 1 and v.ndim == 0:
        v = v[None]
    if v.shape != space.point_shape:
        raise InvalidInputError(
            f"expected shape {space.point_shape} for {space.kind}, got {v.shape}"
        )
    return v


# ----------------------------------------------------------------------
# SPD coordinates

def lc_dimension(p):
    return p + p * (p - 1) // 2


def _lc_from_factor(L):
    p = L.shape[-1]
    i, j = np.tril_indices(p, -1)
    off = L[..., i, j]
    logdiag = np.log(np.diagonal(L, axis1=-2, axis2=-1))
    return np.concatenate([off, logdiag], axis=-1)


def spd_log_cholesky_coords(Y):
    """Log-Cholesky coordinates of SPD matrices.

    The vector holds the strictly lower-triangular entries of the Cholesky
    factor ``L`` (row-major) followed by ``log(diag(L))``.  Works on a single
    matrix or a stack.
    """
    if isinstance(Y, MetricObject):
        Y = Y.value
    Y = np.asarray(Y, dtype=float)
    return _lc_from_factor(cholesky(Y))


def spd_from_log_cholesky(coords, p=None):
    """Inverse of :func:`spd_log_cholesky_coords`."""
    c = np.asarray(coords, dtype=float)
    k = c.shape[-1]
    if p is None:
        p = int(round((np.sqrt(8 * k + 1) - 1) / 2))
    if lc_dimension(p) != k:
        raise InvalidInputError(f"coordinate length {k} is not p + p(p-1)/2")
    n_off = k - p
    L = np.zeros(c.shape[:-1] + (p, p))
    i, j = np.tril_indices(p, -1)
    L[..., i, j] = c[..., :n_off]
    d = np.arange(p)
    L[..., d, d] = np.exp(c[..., n_off:])
    return L @ np.swapaxes(L, -1, -2)


def spd_matrix_log(Y):
    """Matrix logarithm ``U log(Λ) U^T`` of an SPD matrix (or stack)."""
    if isinstance(Y, MetricObject):
        Y = Y.value
    return spd_log(np.asarray(Y, dtype=float))


def spd_matrix_exp(S):
    """Matrix exponential of a symmetric matrix (or stack)."""
    return sym_exp(np.asarray(S, dtype=float))


def _sym_to_vec(S):
    """Vector whose Euclidean norm equals the Frobenius norm of ``S``."""
    p = S.shape[-1]
    i, j = np.tril_indices(p, -1)
    d = np.arange(p)
    return np.concatenate([np.sqrt(2.0) * S[..., i, j], S[..., d, d]], axis=-1)


def _vec_to_sym(v, p):
    i, j = np.tril_indices(p, -1)
    d = np.arange(p)
    n_off = len(i)
    S = np.zeros(v.shape[:-1] + (p, p))
    S[..., i, j] = v[..., :n_off] / np.sqrt(2.0)
    S[..., j, i] = S[..., i, j]
    S[..., d, d] = v[..., n_off:]
    return S


def flat_coordinates(space, arr):
    """Coordinates in which ``space``'s metric is the Euclidean norm.

    Undefined for the geodesic sphere metric.
    """
    if space.kind == "euclidean":
        return arr.reshape(arr.shape[0], -1)
    if space.kind == "sphere":
        if space.metric != "chordal":
            raise InvalidInputError("geodesic sphere metric has no flat coordinates")
        return arr
    if space.kind == "wasserstein":
        return arr * np.sqrt(space.weights_array)
    if space.metric == "log_cholesky":
        return spd_log_cholesky_coords(arr)
    return _sym_to_vec(spd_log(arr))


# ----------------------------------------------------------------------
# sphere maps

def _clamp(x):
    return np.clip(x, -1.0, 1.0)


def sphere_log(base, y):
    """Riemannian log map on the unit sphere.

    Returns the tangent vector at ``base`` pointing towards ``y`` whose norm
    is the geodesic distance.  ``y`` may be a stack of points.
    """
    if isinstance(base, MetricObject):
        base = base.value
    if isinstance(y, MetricObject):
        y = y.value
    base = np.asarray(base, dtype=float)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    inner = Y @ base
    bad = np.flatnonzero(inner < -1.0 + ANTIPODAL_TOL)
    if bad.size:
        where = "" if single else f" (index {bad[0]})"
        raise GeometryError(f"point is antipodal to the base point{where}")
    theta = np.arccos(_clamp(inner))
    perp = Y - inner[:, None] * base
    norm = np.linalg.norm(perp, axis=1)
    # sin(theta) ~ norm; theta/norm -> 1 as theta -> 0
    factor = np.where(norm > 1e-300, theta / np.where(norm > 1e-300, norm, 1.0), 1.0)
    out = factor[:, None] * perp
    out[theta == 0.0] = 0.0
    return out[0] if single else out


def sphere_exp(base, v):
    """Riemannian exponential map on the unit sphere."""
    if isinstance(base, MetricObject):
        base = base.value
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = np.atleast_2d(v)
    t = np.linalg.norm(V, axis=1)
    safe = np.where(t > 0, t, 1.0)
    out = np.cos(t)[:, None] * base + (np.sin(t) / safe)[:, None] * V
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out[0] if single else out


def geodesic_distance_sphere(a, b):
    return np.arccos(_clamp(np.sum(a * b, axis=-1)))


# ----------------------------------------------------------------------
# distances

def distance(space, a, b):
    """Distance between two objects of ``space``."""
    va = _check_same_space(space, a)
    vb = _check_same_space(space, b)
    return float(pairwise_distances(space, va[None], vb[None])[0, 0])


def pairwise_distances(space, A, B=None):
    """Distance matrix between two samples (or within one)."""
    A = as_points(space, A, validate=False)
    B = A if B is None else as_points(space, B, validate=False)
    if space.kind == "sphere" and space.metric == "geodesic":
        return np.arccos(_clamp(A @ B.T))
    ca = flat_coordinates(space, A)
    cb = ca if B is A else flat_coordinates(space, B)
    return cdist(ca, cb)


def distances_to(space, arr, point):
    """Distances from each point of ``arr`` to a single ``point``."""
    point = _check_same_space(space, point)
    return pairwise_distances(space, arr, point[None])[:, 0]


# ----------------------------------------------------------------------
# Fréchet means

def _normalised_weights(weights, n):
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be finite, nonnegative, one per point")
    total = w.sum()
    if total <= 0:
        raise InvalidInputError("weights must sum to a positive value")
    return w / total


def frechet_mean_array(space, arr, weights=None):
    """Array-level Fréchet mean.

    Returns ``(mean, variance, iterations, gradient_norm)`` with ``mean`` an
    array of shape ``space.point_shape``.
    """
    n = arr.shape[0]
    if n == 0:
        raise InvalidInputError("Fréchet mean of an empty sample")
    w = _normalised_weights(weights, n)
    kind = space.kind
    if kind in ("euclidean", "wasserstein"):
        mean = w @ arr
        diff = arr - mean
        if kind == "wasserstein":
            var = float(w @ (diff * diff @ space.weights_array))
        else:
            var = float(w @ np.sum(diff * diff, axis=1))
        return mean, max(var, 0.0), 0, 0.0
    if kind == "spd":
        coords = flat_coordinates(space, arr)
        mc = w @ coords
        diff = coords - mc
        var = float(w @ np.sum(diff * diff, axis=1))
        if space.metric == "log_cholesky":
            mean = spd_from_log_cholesky(mc, space.dim)
        else:
            mean = spd_matrix_exp(_vec_to_sym(mc, space.dim))
        return mean, max(var, 0.0), 0, 0.0
    # sphere
    amb = w @ arr
    norm = np.linalg.norm(amb)
    if space.metric == "chordal":
        if norm < 1e-12:
            raise DegenerateMeanError("chordal sphere mean undefined: ambient mean is 0")
        mean = amb / norm
        diff = arr - mean
        var = float(w @ np.sum(diff * diff, axis=1))
        return mean, max(var, 0.0), 0, 0.0
    return _karcher_mean(arr, w, amb / norm if norm >= 1e-12 else arr[0])


def _karcher_mean(arr, w, start):
    mu = np.asarray(start, dtype=float)
    grad = np.inf
    for it in range(1, KARCHER_MAX_ITER + 1):
        v = w @ sphere_log(mu, arr)
        grad = float(np.linalg.norm(v))
        if grad < KARCHER_TOL:
            theta = geodesic_distance_sphere(arr, mu)
            return mu, float(w @ theta**2), it, grad
        mu = sphere_exp(mu, v)
    raise ConvergenceError(
        f"Karcher mean did not converge in {KARCHER_MAX_ITER} iterations "
        f"(gradient norm {grad:.3e})",
        iterations=KARCHER_MAX_ITER,
        gradient_norm=grad,
    )


def frechet_mean(space, points, weights=None):
    """Weighted sample Fréchet mean and variance.

    Closed forms are used for every geometry except the geodesic sphere,
    which runs a Karcher fixed-point iteration (unit step, tolerance 1e-10,
    at most 200 iterations) started from the normalised ambient mean.

    Parameters
    ----------
    space : SpaceDescriptor
    points : array or sequence of MetricObject
    weights : sequence of float, optional
        Nonnegative weights; normalised internally.

    Returns
    -------
    FrechetSummary
    """
    arr = as_points(space, points)
    mean, var, it, grad = frechet_mean_array(space, arr, weights)
    return FrechetSummary(MetricObject(space.kind, mean), var, it, grad)


def frechet_variance(space, arr, mean, weights=None):
    """Weighted mean squared distance of ``arr`` to ``mean``."""
    n = arr.shape[0]
    w = _normalised_weights(weights, n)
    d = distances_to(space, arr, mean)
    return float(w @ d**2)
