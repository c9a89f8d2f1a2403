"""Plug-in null limits of ``n * rho_hat`` used to cross-check the bootstrap.

Two regimes are covered, both for flat response embeddings (euclidean,
Wasserstein quantiles, Log-Cholesky SPD):

* fixed number of cells: ``n * rho_hat`` is asymptotically a weighted sum
  of independent chi-square(1) variables whose weights are the eigenvalues
  of a plug-in ``(M k) x (M k)`` matrix;
* growing number of cells: a centred and scaled version of ``n * rho_hat``
  is asymptotically standard normal.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .bootstrap import mix64
from .errors import DegenerateDiagnosticError, InvalidInputError, NumericError

WEIGHTED_CHI2_DRAWS = 1_000_000
WEIGHTED_CHI2_SEED = 20240607
_CHUNK = 100_000


class TailProbability(NamedTuple):
    p: float
    se: float


@dataclass(frozen=True)
class SpectrumResult:
    """Weights of the fixed-partition weighted chi-square null law.

    The limit law of ``n * rho_hat`` is ``scale * sum_l gamma_l Z_l^2``.
    """

    eigenvalues: np.ndarray
    scale: float
    source: str
    trace: float

    def tail(self, x, draws=WEIGHTED_CHI2_DRAWS, seed=WEIGHTED_CHI2_SEED):
        """``P(scale * sum gamma Z^2 >= x)`` by Monte Carlo."""
        return weighted_chi2_tail(x / self.scale, self.eigenvalues, draws, seed)


@dataclass(frozen=True)
class StudentizedDiagnostic:
    """Centred and scaled ``n * rho_hat`` for growing partitions.

    ``mu_hat`` and ``sigma_hat`` are the quantile-operator forms
    ``sum tr(S_m)`` and ``sqrt(2 sum tr(S_m^2))`` with ``S_m`` the within-cell
    covariance of the embedded responses; ``z_score`` divides them by
    ``V_F``.  ``z_manifold`` is the same statistic computed from the
    Hessian/score form and must agree with ``z_score``.
    """

    stat: float
    mu_hat: float
    sigma_hat: float
    z_score: float
    z_manifold: float
    trace_cov: np.ndarray
    trace_cov_sq: np.ndarray


def _cell_covariances(Zc, partition, min_size=2):
    covs = []
    for m, idx in enumerate(partition.cells()):
        if idx.size < min_size:
            raise InvalidInputError(f"cell {m} has fewer than {min_size} observations")
        z = Zc[idx] - Zc[idx].mean(axis=0)
        covs.append(z.T @ z / idx.size)
    return covs


def _block_sqrt(cov):
    w, v = np.linalg.eigh(cov)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _assemble(roots, fractions, inner_cell, inner_cross):
    """``blockdiag(R) (diag(inner_cell) - inner_cross * p p^T (x) I) blockdiag(R)``."""
    M = len(roots)
    k = roots[0].shape[0]
    sp = np.sqrt(fractions)
    Bm = np.zeros((M * k, M * k))
    for a in range(M):
        for b in range(a, M):
            block = -inner_cross * sp[a] * sp[b] * (roots[a] @ roots[b])
            if a == b:
                block = block + inner_cell * (roots[a] @ roots[a])
            Bm[a * k:(a + 1) * k, b * k:(b + 1) * k] = block
            if a != b:
                Bm[b * k:(b + 1) * k, a * k:(a + 1) * k] = block.T
    return 0.5 * (Bm + Bm.T)


def fixed_m_spectrum(embedded, partition, v_f_hat, form="manifold"):
    """Eigenvalues of the plug-in fixed-partition operator.

    ``form="manifold"`` uses the score covariance ``C_m = 4 S_m`` and the
    flat Hessian ``Λ_m = Λ = 2 I``, giving the law
    ``(1 / (2 V_F)) sum gamma Z^2``.  ``form="wasserstein"`` uses ``S_m``
    directly with the projection ``I - p p^T (x) I``, giving
    ``(1 / V_F) sum gamma Z^2``.  The two laws coincide.
    """
    if form not in ("manifold", "wasserstein"):
        raise InvalidInputError(f"unknown spectrum form {form!r}")
    Zc = embedded.centered
    covs = _cell_covariances(Zc, partition)
    frac = partition.cell_fractions
    if form == "manifold":
        roots = [_block_sqrt(4.0 * c) for c in covs]
        # D = diag(Λ_m^{-1}) = I / 2 and (p p^T) (x) Λ^{-1} = p p^T (x) I / 2
        Bm = _assemble(roots, frac, 0.5, 0.5)
        scale = 1.0 / (2.0 * v_f_hat)
        source = "fixed_M_manifold"
        trace = float(sum(0.5 * np.trace(4.0 * c) * (1.0 - f) for c, f in zip(covs, frac)))
    else:
        roots = [_block_sqrt(c) for c in covs]
        Bm = _assemble(roots, frac, 1.0, 1.0)
        scale = 1.0 / v_f_hat
        source = "fixed_M_wasserstein"
        trace = float(sum(np.trace(c) * (1.0 - f) for c, f in zip(covs, frac)))
    gammas = np.linalg.eigvalsh(Bm)
    return SpectrumResult(gammas, scale, source, trace)


def chi2_upper_tail(x, k):
    """Upper tail ``P(chi2_k >= x)``, the regularised gamma ``Q(k/2, x/2)``."""
    if x < 0:
        raise InvalidInputError("x must be nonnegative")
    if k < 1:
        raise InvalidInputError("degrees of freedom must be positive")
    return float(special.gammaincc(k / 2.0, x / 2.0))


def weighted_chi2_tail(x, gammas, draws=WEIGHTED_CHI2_DRAWS, seed=WEIGHTED_CHI2_SEED):
    """Monte Carlo ``P(sum gamma_l Z_l^2 >= x)`` with its standard error.

    Draws are generated in fixed-size chunks from counter-derived streams,
    so the estimate is reproducible and monotone in ``x`` for a fixed seed.
    """
    g = np.asarray(gammas, dtype=float).reshape(-1)
    if not np.all(np.isfinite(g)):
        raise InvalidInputError("gammas must be finite")
    tol = 1e-12 * max(1.0, np.max(np.abs(g), initial=0.0))
    g = g[np.abs(g) > tol]
    draws = int(draws)
    if g.size == 0:
        p = 1.0 if x <= 0 else 0.0
        return TailProbability(p, 0.0)
    hits = 0
    done = 0
    chunk_id = 0
    while done < draws:
        m = min(_CHUNK, draws - done)
        rng = np.random.Generator(np.random.PCG64(mix64(seed, chunk_id)))
        total = np.zeros(m)
        for gamma in g:
            z = rng.standard_normal(m)
            total += gamma * z * z
        hits += int(np.count_nonzero(total >= x))
        done += m
        chunk_id += 1
    p = hits / draws
    return TailProbability(p, float(np.sqrt(p * (1.0 - p) / draws)))


def studentized_diagnostic(embedded, partition, rho_hat, v_f_hat):
    """Studentized ``n * rho_hat`` for the growing-partition regime.

    Computes both the score/Hessian form (``C_m`` = within-cell covariance of
    ``2 (Z - Zbar)``, ``Λ_m = 2 I``) and the covariance-operator form, and
    checks that they agree.

    Raises
    ------
    DegenerateDiagnosticError
        If the scale is zero (e.g. responses constant within every cell).
    """
    Zc = embedded.centered
    n = Zc.shape[0]
    tr, tr2 = [], []
    for m, idx in enumerate(partition.cells()):
        if idx.size < 2:
            raise InvalidInputError(f"cell {m} has fewer than 2 observations")
        z = Zc[idx] - Zc[idx].mean(axis=0)
        nm = idx.size
        if z.shape[1] <= nm:
            S = z.T @ z / nm
        else:
            S = z @ z.T / nm  # same nonzero spectrum, cheaper when k > n_m
        tr.append(np.trace(S))
        tr2.append(np.sum(S * S))
    tr = np.asarray(tr)
    tr2 = np.asarray(tr2)
    stat = n * rho_hat

    mu_w = float(tr.sum())
    sigma_w = float(np.sqrt(2.0 * tr2.sum()))
    # score form: Λ_m^{-1} C_m = (1/2) 4 S_m = 2 S_m
    mu_m = float(np.sum(2.0 * tr))
    sigma_m = float(np.sqrt(2.0 * np.sum(4.0 * tr2)))
    if sigma_w <= 0.0 or sigma_m <= 0.0:
        raise DegenerateDiagnosticError("studentized diagnostic has zero scale")
    z_w = (stat - mu_w / v_f_hat) / (sigma_w / v_f_hat)
    z_m = (stat - mu_m / (2.0 * v_f_hat)) / (sigma_m / (2.0 * v_f_hat))
    if abs(z_w - z_m) > 1e-8 * max(1.0, abs(z_w)):
        raise NumericError("score and operator forms of the diagnostic disagree")
    return StudentizedDiagnostic(stat, mu_w, sigma_w, z_w, z_m, tr, tr2)
