"""Coordinate embeddings of responses used by the wild bootstrap."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GeometryError
from .metric_objects import (
    MetricObject,
    as_points,
    flat_coordinates,
    frechet_mean_array,
    lc_dimension,
    sphere_log,
)


@dataclass(frozen=True)
class EmbeddedSample:
    """Embedded response vectors and their centred versions.

    Attributes
    ----------
    vectors : ndarray, shape (n, k)
        Raw embedded responses ``Z_i``.
    global_mean : ndarray, shape (k,)
        Vector mean of ``vectors``.
    centered : ndarray, shape (n, k)
        ``vectors - global_mean``.
    embed_kind : str
    base_point : MetricObject or None
        Linearisation point (sphere responses only).
    """

    vectors: np.ndarray
    global_mean: np.ndarray
    centered: np.ndarray
    embed_kind: str
    base_point: Optional[MetricObject] = None

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def recentered(self):
        """Centre the already-centred vectors again (a no-op up to rounding)."""
        return from_vectors(self.centered, self.embed_kind, self.base_point)


def from_vectors(vectors, embed_kind="euclidean", base_point=None):
    """Wrap raw vectors as an :class:`EmbeddedSample`.

    The global mean is summed in index order so the result does not depend
    on how the vectors were produced.
    """
    Z = np.ascontiguousarray(vectors, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    mean = Z.mean(axis=0)
    return EmbeddedSample(Z, mean, Z - mean, embed_kind, base_point)


def embedding_dimension(space):
    """Length of the embedded response vectors for ``space``."""
    if space.kind == "spd":
        return lc_dimension(space.dim)
    return space.dim


def embed_responses(space, Y):
    """Embed a response sample for the wild bootstrap.

    * euclidean: ``Z_i = Y_i``;
    * wasserstein: ``Z_i = sqrt(w) * Q_i`` on the grid;
    * spd: Log-Cholesky coordinates, or the vectorised matrix logarithm
      (off-diagonals weighted by sqrt 2) under the log-Euclidean metric;
    * sphere: log map at the sample Fréchet mean under the space metric
      (the normalised ambient mean for the default chordal metric).
    """
    arr = as_points(space, Y)
    if space.kind == "euclidean":
        return from_vectors(arr, "euclidean")
    if space.kind == "wasserstein":
        return from_vectors(arr * np.sqrt(space.weights_array), "wasserstein")
    if space.kind == "spd":
        return from_vectors(flat_coordinates(space, arr), space.metric)
    base, _, _, _ = frechet_mean_array(space, arr)
    inner = arr @ base
    bad = np.flatnonzero(inner < -1.0 + 1e-12)
    if bad.size:
        raise GeometryError(
            f"response {bad[0]} is antipodal to the sample Fréchet mean"
        )
    Z = sphere_log(base, arr)
    return from_vectors(Z, "sphere_log", MetricObject("sphere", base))
