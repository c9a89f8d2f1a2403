"""Fixed-partition wild bootstrap and permutation tests.

Replicate ``b`` of a test seeded with ``seed`` always draws from its own
generator, ``PCG64(mix64(seed, b))``, so results do not depend on how the
replicates are scheduled.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embeddings import embed_responses
from .errors import DegenerateResponseError, InvalidInputError
from .fcc import VF_FLOOR, fcc_estimate
from .linalg import cholesky
from .metric_objects import as_points, frechet_mean_array

_MASK64 = (1 << 64) - 1


def mix64(seed, counter=0):
    """Derive a 64-bit stream key from ``(seed, counter)``.

    SplitMix64 finaliser applied to ``seed + (counter + 1) * golden_gamma``.
    """
    z = (int(seed) + (int(counter) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replicate_rng(seed, b):
    """Generator for replicate ``b`` of a procedure seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(mix64(seed, b)))


# ----------------------------------------------------------------------
# multipliers

_MAMMEN_LO = -(np.sqrt(5.0) - 1.0) / 2.0
_MAMMEN_HI = (np.sqrt(5.0) + 1.0) / 2.0
_MAMMEN_P_LO = (np.sqrt(5.0) + 1.0) / (2.0 * np.sqrt(5.0))


@dataclass(frozen=True)
class MultiplierLaw:
    """Mean-zero, unit-variance multiplier distribution."""

    kind: str = "rademacher"

    def __post_init__(self):
        aliases = {"mammen": "mammen_two_point"}
        kind = aliases.get(self.kind, self.kind)
        if kind not in ("rademacher", "gaussian", "mammen_two_point"):
            raise InvalidInputError(f"unknown multiplier law {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    def draw(self, rng, size):
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=size) * 2.0 - 1.0
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        u = rng.random(size)
        return np.where(u < _MAMMEN_P_LO, _MAMMEN_LO, _MAMMEN_HI)


# ----------------------------------------------------------------------
# normalisation

@dataclass(frozen=True)
class NormalizationSpec:
    """Normalisation matrices of the between-cell quadratic form.

    With ``kind == "identity"`` no matrices are stored.  Otherwise
    ``cell_matrices[m]`` is ``H_m`` and ``global_matrix`` is ``H``; the
    statistic uses their inverses.
    """

    kind: str = "identity"
    cell_matrices: Optional[tuple] = None
    global_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("identity", "plugin_hessian"):
            raise InvalidInputError(f"unknown normalization {self.kind!r}")
        if self.kind == "identity":
            if self.cell_matrices is not None or self.global_matrix is not None:
                raise InvalidInputError("identity normalization stores no matrices")
            return
        if self.cell_matrices is None or self.global_matrix is None:
            raise InvalidInputError("plugin normalization needs H_m and H")
        mats = [np.asarray(h, dtype=float) for h in self.cell_matrices]
        for h in mats + [np.asarray(self.global_matrix, dtype=float)]:
            if h.ndim != 2 or h.shape[0] != h.shape[1]:
                raise InvalidInputError("normalization matrices must be square")
            if np.max(np.abs(h - h.T)) > 1e-10 * max(1.0, np.max(np.abs(h))):
                raise InvalidInputError("normalization matrix is not symmetric")
            try:
                cholesky(h, jitter=0.0)
            except Exception:
                raise InvalidInputError(
                    "normalization matrix is not positive definite"
                ) from None
        object.__setattr__(self, "cell_matrices", tuple(mats))
        object.__setattr__(
            self, "global_matrix", np.asarray(self.global_matrix, dtype=float)
        )

    def inverses(self, M):
        """``(H_m^{-1} list, H^{-1})``, or ``(None, None)`` for identity."""
        if self.kind == "identity":
            return None, None
        if len(self.cell_matrices) != M:
            raise InvalidInputError(
                f"normalization has {len(self.cell_matrices)} cells, partition has {M}"
            )
        return [np.linalg.inv(h) for h in self.cell_matrices], np.linalg.inv(
            self.global_matrix
        )


def _sphere_hessian(base, Y):
    """Average Hessian of ``d_geo^2(y, .)`` at ``base``, ambient coordinates."""
    d = base.size
    P = np.eye(d) - np.outer(base, base)
    inner = np.clip(Y @ base, -1.0, 1.0)
    theta = np.arccos(inner)
    perp = Y - inner[:, None] * base
    norm = np.linalg.norm(perp, axis=1)
    H = np.zeros((d, d))
    for t, v, r in zip(theta, perp, norm):
        if r < 1e-14:
            H += 2.0 * P
            continue
        u = v / r
        uu = np.outer(u, u)
        H += 2.0 * (uu + (t / np.tan(t)) * (P - uu))
    return H / len(Y)


def plugin_normalization(space, Y, partition, embedded=None):
    """Plug-in normalisation ``H_m = Λ_m / 2`` from averaged Hessians.

    For flat embeddings the Hessian of the squared distance is ``2 I`` and
    every matrix is the identity.  For sphere responses the Hessian of the
    squared geodesic distance is averaged within each cell at the base point
    of the log-map embedding; the normal direction gets unit weight so the
    matrices are invertible on the ambient coordinates.
    """
    arr = as_points(space, Y)
    if embedded is None:
        embedded = embed_responses(space, arr)
    k = embedded.dim
    if space.kind != "sphere":
        eye = np.eye(k)
        return NormalizationSpec("plugin_hessian", tuple(eye for _ in range(partition.M)), eye)
    base = embedded.base_point.value
    normal = np.outer(base, base)
    cells = tuple(
        _sphere_hessian(base, arr[idx]) / 2.0 + normal for idx in partition.cells()
    )
    glob = _sphere_hessian(base, arr) / 2.0 + normal
    return NormalizationSpec("plugin_hessian", cells, glob)


def _resolve_norm(norm, space, Y, partition, embedded):
    if isinstance(norm, NormalizationSpec):
        return norm
    if norm in (None, "identity"):
        return NormalizationSpec()
    if norm in ("plugin", "plugin_hessian"):
        return plugin_normalization(space, Y, partition, embedded)
    raise InvalidInputError(f"unknown normalization {norm!r}")


# ----------------------------------------------------------------------
# statistics

def _quadratic_forms(cell_sums, sizes, n, hm_inv, h_inv):
    """Between-cell quadratic form from cell sums, shape (..., M, k)."""
    total = cell_sums.sum(axis=-2)
    if hm_inv is None:
        within = np.sum(np.sum(cell_sums**2, axis=-1) / sizes, axis=-1)
        return within - np.sum(total**2, axis=-1) / n
    within = 0.0
    for m, hinv in enumerate(hm_inv):
        s = cell_sums[..., m, :]
        within = within + np.einsum("...i,ij,...j->...", s, hinv, s) / sizes[m]
    return within - np.einsum("...i,ij,...j->...", total, h_inv, total) / n


def between_cell_statistic(sample, partition, norm=None):
    """Normalised between-cell quadratic form.

    ``sum_m n_m |H_m^{-1/2} Zbar_m|^2 - n |H^{-1/2} Zbar|^2`` with the cell
    and global means taken over ``sample.centered``.
    """
    norm = norm or NormalizationSpec()
    Zc = sample.centered
    if partition.n != Zc.shape[0]:
        raise InvalidInputError("partition and sample sizes differ")
    cells = partition.cells()
    sums = np.stack([Zc[idx].sum(axis=0) for idx in cells])
    hm_inv, h_inv = norm.inverses(partition.M)
    return float(
        _quadratic_forms(sums, partition.cell_sizes.astype(float), Zc.shape[0], hm_inv, h_inv)
    )


@dataclass
class TestResult:
    """Outcome of a resampling test."""

    __test__ = False  # keep pytest from collecting this class

    statistic_obs: float
    replicates: np.ndarray
    p_value: float
    B: int
    seed: int
    method: str
    normalization: str = ""
    law: str = ""
    n_rho_hat: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_replicates=True):
        out = {
            "method": self.method,
            "T_obs": self.statistic_obs,
            "p_value": self.p_value,
            "B": self.B,
            "seed": self.seed,
        }
        if self.law:
            out["multiplier"] = self.law
        if self.normalization:
            out["normalization"] = self.normalization
        if self.n_rho_hat is not None:
            out["n_rho_hat"] = self.n_rho_hat
        out.update(self.extra)
        if include_replicates:
            out["replicates"] = np.asarray(self.replicates).tolist()
        return out

    def to_json(self, include_replicates=True, **kwargs):
        return json.dumps(self.to_dict(include_replicates), **kwargs)


def p_value_from(statistic_obs, replicates):
    """``(1 + #{T*_b >= T_obs}) / (B + 1)``."""
    reps = np.asarray(replicates, dtype=float)
    return (1.0 + np.count_nonzero(reps >= statistic_obs)) / (reps.size + 1.0)


def wild_bootstrap_test(
    X, Y, space_Y, partition, B=500, law="rademacher", norm="identity", seed=0
):
    """Fixed-partition wild bootstrap test of no Fréchet-mean dependence.

    The embedded responses are centred at their global mean, multiplied by
    fresh i.i.d. multipliers for each replicate and the between-cell form is
    recomputed with the same partition, normalisation and ``V_F``.

    Parameters
    ----------
    X : predictor sample (only its length is used)
    Y : response sample
    space_Y : SpaceDescriptor
    partition : Partition
    B : int
        Number of bootstrap replicates.
    law : str or MultiplierLaw
    norm : {"identity", "plugin"} or NormalizationSpec
    seed : int

    Returns
    -------
    TestResult
        ``n_rho_hat`` holds ``n`` times the FCC estimate for comparison.
    """
    B = int(B)
    if B < 1:
        raise InvalidInputError("B must be at least 1")
    law = law if isinstance(law, MultiplierLaw) else MultiplierLaw(law)
    arr = as_points(space_Y, Y)
    n = arr.shape[0]
    if X is not None and len(X) != n:
        raise InvalidInputError(f"X has {len(X)} observations, Y has {n}")
    if partition.n != n:
        raise InvalidInputError("partition and sample sizes differ")
    _, v_f, _, _ = frechet_mean_array(space_Y, arr)
    if v_f <= VF_FLOOR:
        raise DegenerateResponseError(
            f"response Fréchet variance {v_f:.3e} is not positive"
        )
    est = fcc_estimate(None, arr, space_Y, partition)
    sample = embed_responses(space_Y, arr)
    spec = _resolve_norm(norm, space_Y, arr, partition, sample)
    t_obs = between_cell_statistic(sample, partition, spec) / v_f

    Zc = sample.centered
    sizes = partition.cell_sizes.astype(float)
    cells = partition.cells()
    xi = np.empty((B, n))
    for b in range(B):
        xi[b] = law.draw(replicate_rng(seed, b), n)
    # einsum's plain loops keep each replicate's value independent of B
    sums = np.stack([np.einsum("bi,ik->bk", xi[:, idx], Zc[idx]) for idx in cells], axis=1)
    hm_inv, h_inv = spec.inverses(partition.M)
    reps = _quadratic_forms(sums, sizes, n, hm_inv, h_inv) / v_f

    return TestResult(
        statistic_obs=float(t_obs),
        replicates=reps,
        p_value=float(p_value_from(t_obs, reps)),
        B=B,
        seed=int(seed),
        method="fcc_wild_bootstrap",
        normalization=spec.kind,
        law=law.kind,
        n_rho_hat=n * est.rho_hat,
        extra={"rho_hat": est.rho_hat, "v_f_hat": v_f, "M": partition.M, "n": n},
    )


def permutation_test(statistic, X, Y, B=500, seed=0, method="permutation"):
    """Permutation test of independence for a user statistic.

    Large values of ``statistic(X, Y)`` count as evidence against the null.
    Replicate ``b`` evaluates ``statistic(X, Y[perm_b])`` with ``perm_b`` a
    Fisher-Yates shuffle from :func:`replicate_rng`.
    """
    B = int(B)
    if B < 1:
        raise InvalidInputError("B must be at least 1")
    n = len(Y)
    if len(X) != n:
        raise InvalidInputError(f"X has {len(X)} observations, Y has {n}")
    is_array = isinstance(Y, np.ndarray)
    t_obs = float(statistic(X, Y))
    reps = np.empty(B)
    for b in range(B):
        perm = replicate_rng(seed, b).permutation(n)
        Yp = Y[perm] if is_array else [Y[i] for i in perm]
        reps[b] = statistic(X, Yp)
    return TestResult(
        statistic_obs=t_obs,
        replicates=reps,
        p_value=float(p_value_from(t_obs, reps)),
        B=B,
        seed=int(seed),
        method=method,
    )
