"""Partition-based Fréchet correlation coefficient."""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResponseError, InvalidInputError
from .metric_objects import MetricObject, as_points, frechet_mean_array

VF_FLOOR = 1e-14


@dataclass(frozen=True)
class FccEstimate:
    """Estimated coefficient together with its cellwise ingredients."""

    rho_hat: float
    v_f_hat: float
    cell_variances: np.ndarray
    cell_means: list
    global_mean: MetricObject
    partition: object

    @property
    def n(self):
        return self.partition.n

    @property
    def M(self):
        return self.partition.M

    @property
    def residual_variance(self):
        """Cell-size weighted mean of the cell variances."""
        return float(self.partition.cell_fractions @ self.cell_variances)

    def to_dict(self):
        return {
            "rho_hat": self.rho_hat,
            "v_f_hat": self.v_f_hat,
            "M": self.M,
            "n": self.n,
            "cell_sizes": self.partition.cell_sizes.tolist(),
            "per_cell_variance": self.cell_variances.tolist(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _check_partition(partition, n):
    if partition.n != n:
        raise InvalidInputError(
            f"partition covers {partition.n} observations, sample has {n}"
        )
    if np.any(partition.cell_sizes <= 0):
        raise InvalidInputError("empty cell in partition")


def cell_summaries(Y, space_Y, partition):
    """Per-cell Fréchet means and variances (1/n_m normalisation).

    Returns
    -------
    means : list of MetricObject
    variances : ndarray, shape (M,)
    """
    arr = as_points(space_Y, Y)
    _check_partition(partition, arr.shape[0])
    means, variances = [], []
    for idx in partition.cells():
        mean, var, _, _ = frechet_mean_array(space_Y, arr[idx])
        means.append(MetricObject(space_Y.kind, mean))
        variances.append(var)
    return means, np.asarray(variances)


def fcc_estimate(X, Y, space_Y, partition):
    """Partition-based FCC estimate.

    ``rho_hat = 1 - sum_m (n_m / n) V_m / V_F`` where ``V_F`` is the sample
    Fréchet variance of ``Y`` and ``V_m`` the sample Fréchet variance of the
    responses falling in cell ``m``.  ``X`` only has to match ``Y`` in length;
    the partition already encodes the predictor geometry.

    Raises
    ------
    DegenerateResponseError
        If the sample Fréchet variance of ``Y`` is not positive.
    """
    arr = as_points(space_Y, Y)
    n = arr.shape[0]
    if X is not None and len(X) != n:
        raise InvalidInputError(f"X has {len(X)} observations, Y has {n}")
    _check_partition(partition, n)
    gmean, v_f, _, _ = frechet_mean_array(space_Y, arr)
    if v_f <= VF_FLOOR:
        raise DegenerateResponseError(
            f"response Fréchet variance {v_f:.3e} is not positive; "
            "the coefficient requires V_F > 0"
        )
    means, variances = cell_summaries(arr, space_Y, partition)
    residual = float(partition.cell_fractions @ variances)
    rho = 1.0 - residual / v_f
    # exact minimisers guarantee [0, 1]; only rounding can leave it
    rho = min(max(rho, 0.0), 1.0)
    return FccEstimate(
        rho, v_f, variances, means, MetricObject(space_Y.kind, gmean), partition
    )
