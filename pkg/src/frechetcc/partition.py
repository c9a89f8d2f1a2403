"""Predictor-space partitions.

The default construction picks prototypes by a farthest-point rule started
at the sample medoid, assigns every observation to its nearest prototype
(smallest prototype index wins ties) and then deletes prototypes whose
cells are too small until every cell meets the minimum size.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .metric_objects import as_points, pairwise_distances


@dataclass(frozen=True)
class Partition:
    """A fixed discretisation of the predictor sample.

    ``prototype_indices`` index the predictor sample; it is empty for
    partitions built from labels.
    """

    prototype_indices: np.ndarray
    assignments: np.ndarray
    cell_sizes: np.ndarray
    cell_fractions: np.ndarray
    H: Optional[int] = None
    min_size: Optional[int] = None
    notes: tuple = field(default=())

    @property
    def M(self):
        return int(self.cell_sizes.size)

    @property
    def n(self):
        return int(self.assignments.size)

    def cells(self):
        """Observation indices of each cell, in cell order."""
        order = np.argsort(self.assignments, kind="stable")
        bounds = np.cumsum(self.cell_sizes)[:-1]
        return np.split(order, bounds)

    def to_csv(self):
        """CSV text with an ``obs_index,cell_index`` table.

        The header comment lines record ``H``, ``min_size`` and ``M``.
        """
        lines = [
            f"# H={'' if self.H is None else self.H}",
            f"# min_size={'' if self.min_size is None else self.min_size}",
            f"# M={self.M}",
            "obs_index,cell_index",
        ]
        lines += [f"{i},{c}" for i, c in enumerate(self.assignments.tolist())]
        return "\n".join(lines) + "\n"


def from_labels(labels, H=None, min_size=None, prototype_indices=(), notes=()):
    """Partition from cell labels ``0..M-1`` (every label must be used)."""
    a = np.asarray(labels)
    if a.ndim != 1 or a.size == 0:
        raise InvalidInputError("labels must be a non-empty 1-D sequence")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(a == np.round(a)):
            raise InvalidInputError("labels must be integers")
    a = a.astype(np.int64)
    if a.min() < 0:
        raise InvalidInputError("labels must be nonnegative")
    sizes = np.bincount(a)
    if np.any(sizes == 0):
        raise InvalidInputError("empty cell in partition")
    n = a.size
    return Partition(
        np.asarray(prototype_indices, dtype=np.int64),
        a,
        sizes.astype(np.int64),
        sizes / n,
        H,
        min_size,
        tuple(notes),
    )


def _distance_matrix(X, space, rows=None):
    arr = as_points(space, X, validate=False)
    if rows is None:
        return pairwise_distances(space, arr)
    return pairwise_distances(space, arr[rows], arr)


def farthest_point_prototypes(X, space, H, D=None):
    """Greedy farthest-point prototype selection.

    The first prototype is the sample medoid; each further prototype is the
    observation farthest from its nearest chosen prototype.  Ties go to the
    smallest index.  Selection stops early once every remaining point
    coincides with a prototype, so fewer than ``H`` indices may come back.

    Returns
    -------
    ndarray of int
        Prototype indices in selection order.
    """
    if D is None:
        D = _distance_matrix(X, space)
    n = D.shape[0]
    H = int(H)
    if n < 1:
        raise InvalidInputError("empty predictor sample")
    if H < 1 or H > n:
        raise InvalidInputError(f"H must lie in [1, n={n}], got {H}")
    first = int(np.argmin(D.sum(axis=1)))
    chosen = [first]
    nearest = D[first].copy()
    while len(chosen) < H:
        nxt = int(np.argmax(nearest))
        if nearest[nxt] <= 0.0:
            break
        chosen.append(nxt)
        np.minimum(nearest, D[nxt], out=nearest)
    return np.asarray(chosen, dtype=np.int64)


def _assign(Dp):
    # argmin returns the first minimum, i.e. the smallest prototype index
    return np.argmin(Dp, axis=0)


def assign_cells(X, space, prototypes, D=None, H=None, min_size=None):
    """Voronoi assignment of every observation to its nearest prototype."""
    prototypes = np.asarray(prototypes, dtype=np.int64)
    if prototypes.size == 0:
        raise InvalidInputError("need at least one prototype")
    Dp = D[prototypes] if D is not None else _distance_matrix(X, space, prototypes)
    labels = _assign(Dp)
    sizes = np.bincount(labels, minlength=prototypes.size)
    keep = sizes > 0
    if not keep.all():
        # a duplicated prototype loses every tie to its earlier copy
        prototypes = prototypes[keep]
        labels = _assign(Dp[keep])
    return from_labels(labels, H=H, min_size=min_size, prototype_indices=prototypes)


def enforce_min_cell_size(partition, X, space, min_size, D=None):
    """Drop prototypes of undersized cells until every cell is large enough.

    At each step the prototype of the smallest undersized cell (lowest cell
    index on ties) is removed and all points are reassigned among the
    survivors.  Stops at a single cell if necessary; that fallback is
    recorded in ``partition.notes``.
    """
    min_size = int(min_size)
    if min_size < 1:
        raise InvalidInputError("min_size must be a positive integer")
    protos = np.asarray(partition.prototype_indices, dtype=np.int64)
    if protos.size == 0:
        raise InvalidInputError("label partitions have no prototypes to remove")
    Dp = D[protos] if D is not None else _distance_matrix(X, space, protos)
    alive = np.arange(protos.size)
    labels = partition.assignments
    sizes = np.bincount(labels, minlength=alive.size)
    while alive.size > 1 and sizes.min() < min_size:
        victim = int(np.argmin(sizes))
        alive = np.delete(alive, victim)
        labels = _assign(Dp[alive])
        sizes = np.bincount(labels, minlength=alive.size)
    notes = tuple(partition.notes)
    if alive.size == 1 and partition.M > 1:
        notes = notes + ("collapsed to a single cell",)
    return from_labels(
        labels,
        H=partition.H,
        min_size=min_size,
        prototype_indices=protos[alive],
        notes=notes,
    )


def build_partition(X, space, H, min_size=1, fit_indices=None):
    """Farthest-point Voronoi partition with a minimum cell size.

    Parameters
    ----------
    X : sample of the predictor space
    space : SpaceDescriptor
    H : int
        Number of prototypes requested.
    min_size : int
        Minimum number of observations per cell.
    fit_indices : sequence of int, optional
        Choose prototypes from this subset only (data splitting).  All
        observations are still assigned.
    """
    arr = as_points(space, X, validate=False)
    n = arr.shape[0]
    H = min(int(H), n)
    if fit_indices is None:
        D = pairwise_distances(space, arr)
        protos = farthest_point_prototypes(arr, space, H, D=D)
    else:
        fit = np.asarray(fit_indices, dtype=np.int64)
        Dfit = pairwise_distances(space, arr[fit])
        protos = fit[farthest_point_prototypes(arr[fit], space, min(H, fit.size), D=Dfit)]
        D = np.zeros((n, n))
        D[protos] = pairwise_distances(space, arr[protos], arr)
    notes = ()
    if protos.size < H:
        notes = (f"only {protos.size} distinct prototypes available",)
    part = assign_cells(arr, space, protos, D=D, H=H, min_size=min_size)
    part = Partition(part.prototype_indices, part.assignments, part.cell_sizes,
                     part.cell_fractions, H, min_size, notes)
    if min_size > 1:
        part = enforce_min_cell_size(part, arr, space, min_size, D=D)
    return part


def quantile_bins(x, M):
    """Equal-count cells for a scalar predictor (ties broken by index)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size
    M = int(M)
    if M < 1 or M > n:
        raise InvalidInputError(f"M must lie in [1, n={n}]")
    order = np.argsort(x, kind="stable")
    labels = np.empty(n, dtype=np.int64)
    labels[order] = (np.arange(n) * M) // n
    return from_labels(labels, H=M)
