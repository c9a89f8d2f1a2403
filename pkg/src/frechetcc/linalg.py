"""Small dense symmetric linear algebra for SPD geometry.

The eigen-solver is a cyclic Jacobi iteration vectorised over a stack of
matrices, which is what the SPD routines need: many small (p <= 16)
matrices at once.  Large spectra (the null-limit operators) go through
``numpy.linalg.eigvalsh`` instead.
"""

import numpy as np

from .errors import GeometryError, NumericError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60


def jacobi_eigh(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of symmetric matrices by cyclic Jacobi rotations.

    Parameters
    ----------
    a : ndarray, shape (..., p, p)
        Symmetric matrices.  Only the symmetric part is used.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm of every matrix is
        below ``tol * max(1, ||A||_F)``.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`NumericError`.

    Returns
    -------
    w : ndarray, shape (..., p)
        Eigenvalues in ascending order.
    v : ndarray, shape (..., p, p)
        Orthonormal eigenvectors, ``v[..., :, k]`` pairs with ``w[..., k]``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError("expected square matrices")
    batch_shape = a.shape[:-2]
    p = a.shape[-1]
    A = 0.5 * (a + np.swapaxes(a, -1, -2))
    A = A.reshape((-1, p, p)).copy()
    V = np.broadcast_to(np.eye(p), A.shape).copy()
    if p > 1:
        scale = np.maximum(1.0, np.sqrt(np.sum(A * A, axis=(1, 2))))
        iu, ju = np.triu_indices(p, 1)
        for _ in range(max_sweeps):
            off = np.sqrt(2.0 * np.sum(A[:, iu, ju] ** 2, axis=1))
            if np.all(off <= tol * scale):
                break
            for i, j in zip(iu, ju):
                apq = A[:, i, j]
                active = apq != 0.0
                if not active.any():
                    continue
                app = A[:, i, i]
                aqq = A[:, j, j]
                safe = np.where(active, apq, 1.0)
                # a tiny apq overflows theta to inf, which correctly gives t = 0
                with np.errstate(over="ignore"):
                    theta = (aqq - app) / (2.0 * safe)
                    t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c_ = c[:, None]
                s_ = s[:, None]
                # A <- J^T A J with J the (i, j) plane rotation
                ai = A[:, :, i].copy()
                aj = A[:, :, j]
                A[:, :, i] = c_ * ai - s_ * aj
                A[:, :, j] = s_ * ai + c_ * aj
                ai = A[:, i, :].copy()
                aj = A[:, j, :]
                A[:, i, :] = c_ * ai - s_ * aj
                A[:, j, :] = s_ * ai + c_ * aj
                A[:, i, j] = 0.0
                A[:, j, i] = 0.0
                vi = V[:, :, i].copy()
                vj = V[:, :, j]
                V[:, :, i] = c_ * vi - s_ * vj
                V[:, :, j] = s_ * vi + c_ * vj
        else:
            off = np.sqrt(2.0 * np.sum(A[:, iu, ju] ** 2, axis=1))
            if not np.all(off <= tol * scale):
                raise NumericError(
                    f"Jacobi eigen-solver did not converge in {max_sweeps} sweeps"
                )
    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(batch_shape + (p,)), V.reshape(batch_shape + (p, p))


def sym_apply(a, func):
    """Apply a scalar function to symmetric matrices through their spectrum."""
    w, v = jacobi_eigh(a)
    fw = func(w)
    return np.einsum("...ik,...k,...jk->...ij", v, fw, v)


def spd_log(a):
    """Matrix logarithm of SPD matrices, shape (..., p, p)."""
    w, v = jacobi_eigh(a)
    if np.any(w <= 0.0):
        raise GeometryError("matrix is not positive definite")
    return np.einsum("...ik,...k,...jk->...ij", v, np.log(w), v)


def sym_exp(a):
    """Matrix exponential of symmetric matrices, shape (..., p, p)."""
    return sym_apply(a, np.exp)


def sym_sqrt_psd(a):
    """Square root of positive semi-definite matrices (negative noise clipped)."""
    return sym_apply(a, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def cholesky(a, jitter=1e-12):
    """Lower Cholesky factors of a stack of SPD matrices.

    One retry with ``jitter * I`` added is made before reporting which
    matrix is not positive definite.
    """
    a = np.asarray(a, dtype=float)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(a.shape[-1])
    try:
        return np.linalg.cholesky(a + jitter * eye)
    except np.linalg.LinAlgError:
        pass
    flat = a.reshape((-1,) + a.shape[-2:])
    for idx, m in enumerate(flat):
        try:
            np.linalg.cholesky(m + jitter * eye)
        except np.linalg.LinAlgError:
            if flat.shape[0] == 1:
                raise GeometryError("matrix is not positive definite") from None
            raise GeometryError(f"matrix {idx} is not positive definite") from None
    raise GeometryError("matrix is not positive definite")  # pragma: no cover
