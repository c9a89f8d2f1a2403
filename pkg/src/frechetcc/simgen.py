"""Seeded data generators for the simulation settings and noise models.

Settings ``s1``-``s5`` are the power/size benchmarks (Euclidean vectors,
sphere, Wasserstein, Log-Cholesky SPD, Wishart SPD).  The four noise models
``wass_noise_1``, ``wass_noise_2``, ``spd_logE_1`` and ``spd_logE_2`` are
used to check that the coefficient shrinks as the noise level grows.
"""

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import GeometryError, InvalidInputError, ParseError
from .metric_objects import (
    MetricObject,
    SpaceDescriptor,
    lc_dimension,
    spd_from_log_cholesky,
    spd_matrix_exp,
    uniform_grid,
)

SETTINGS = (
    "s1", "s2", "s3", "s4", "s5",
    "wass_noise_1", "wass_noise_2", "spd_logE_1", "spd_logE_2",
)

# (H, minimum cell size) used with each setting
PARTITION_DEFAULTS = {
    "s1": (30, 4),
    "s2": (15, 5),
    "s3": (15, 5),
    "s4": (15, 5),
    "s5": (15, 5),
    "wass_noise_1": (15, 5),
    "wass_noise_2": (15, 5),
    "spd_logE_1": (15, 5),
    "spd_logE_2": (15, 5),
}

_DEFAULTS = {
    "s1": dict(p=3, delta=0.5),
    "s2": dict(delta=0.5, sigma_x=0.2, sigma_y=0.2, k=2),
    "s3": dict(delta=0.5, sigma_x=1.0, sigma_y=0.4, eta=0.5, k=2, m=99),
    "s4": dict(p=4, delta=0.5, sigma_x=0.2, sigma_y=0.2, tau_nuis=0.1),
    "s5": dict(p=4, nu=16.0, delta=0.5),
    "wass_noise_1": dict(sigma=1.0, m=99, x_low=0.5, x_high=3.5),
    "wass_noise_2": dict(sigma=1.0, m=99, x_low=0.5, x_high=3.5),
    "spd_logE_1": dict(sigma=1.0),
    "spd_logE_2": dict(sigma=1.0),
}


def _identity(x):
    return x


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one generated sample.

    Fields that a setting does not use are ignored.  ``zeta`` is the
    location link of the Wasserstein noise models.
    """

    setting: str
    n: int = 100
    delta: float = 0.5
    sigma: float = 1.0
    sigma_x: float = 0.2
    sigma_y: float = 0.2
    tau_nuis: float = 0.1
    p: int = 3
    m: int = 99
    k: int = 2
    eta: float = 0.5
    nu: float = 16.0
    x_low: float = 0.5
    x_high: float = 3.5
    seed: int = 0
    zeta: Callable = field(default=_identity, compare=False, repr=False)

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise InvalidInputError(f"unknown setting {self.setting!r}")
        if int(self.n) < 1:
            raise InvalidInputError("n must be positive")
        if self.setting.startswith("s") and self.setting[1:].isdigit():
            if not 0.0 <= self.delta <= 1.0:
                raise InvalidInputError("delta must lie in [0, 1]")
        if self.setting == "s1" and self.p < 1:
            raise InvalidInputError("s1 needs p >= 1")
        if self.setting == "s2" and self.k < 2:
            raise InvalidInputError("s2 needs k >= 2")
        if self.setting == "s4" and self.p < 3:
            raise InvalidInputError("s4 needs p >= 3")
        if self.setting == "s5" and not self.nu > self.p - 1:
            raise InvalidInputError("s5 needs nu > p - 1")
        if self.sigma < 0 or self.sigma_x < 0 or self.sigma_y < 0 or self.tau_nuis < 0:
            raise InvalidInputError("noise scales must be nonnegative")

    @classmethod
    def for_setting(cls, setting, **overrides):
        """Config with the setting's defaults, then ``overrides``."""
        if setting not in SETTINGS:
            raise InvalidInputError(f"unknown setting {setting!r}")
        params = dict(_DEFAULTS[setting])
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(setting=setting, **params)

    @classmethod
    def from_mapping(cls, mapping):
        mapping = dict(mapping)
        if "setting" not in mapping:
            raise InvalidInputError("config needs a 'setting' key")
        setting = mapping.pop("setting")
        known = {f.name: f.type for f in fields(cls)}
        types = {"n": int, "p": int, "m": int, "k": int, "seed": int}
        params = {}
        for key, value in mapping.items():
            if key not in known or key == "zeta":
                raise InvalidInputError(f"unknown config key {key!r}")
            conv = types.get(key, float)
            try:
                params[key] = conv(value)
            except (TypeError, ValueError):
                raise InvalidInputError(f"bad value for {key}: {value!r}") from None
        return cls.for_setting(setting, **params)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        d.pop("zeta")
        return d


def parse_config(text, path=None):
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno, path)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno, path)
        out[key] = value
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return SimConfig.from_mapping(parse_config(fh.read(), path))


@dataclass(frozen=True)
class PairedSample:
    """Paired predictor/response sample, both stored as stacked arrays."""

    X: np.ndarray
    Y: np.ndarray
    space_X: SpaceDescriptor
    space_Y: SpaceDescriptor

    def __post_init__(self):
        if len(self.X) != len(self.Y):
            raise InvalidInputError("X and Y differ in length")

    @property
    def n(self):
        return len(self.X)

    def x_objects(self):
        return [MetricObject(self.space_X.kind, v) for v in self.X]

    def y_objects(self):
        return [MetricObject(self.space_Y.kind, v) for v in self.Y]

    def first_coordinates(self):
        """``(X_1, Y_1)`` scalar slice of a Euclidean sample."""
        if self.space_X.kind != "euclidean" or self.space_Y.kind != "euclidean":
            raise InvalidInputError("scalar slice needs Euclidean X and Y")
        return self.X[:, 0], self.Y[:, 0]

    def scalar_slice(self):
        x, y = self.first_coordinates()
        e1 = SpaceDescriptor.euclidean(1)
        return PairedSample(x[:, None], y[:, None], e1, e1)


# ----------------------------------------------------------------------
# primitives

def _rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def inv_normal_cdf(u):
    """Standard normal quantile function."""
    arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise InvalidInputError("probability must lie strictly inside (0, 1)")
    out = special.ndtri(arr)
    return float(out) if np.ndim(out) == 0 else out


def normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _bartlett(rng, nu, p, size):
    """Stack of Bartlett factors A with A A^T ~ W_p(nu, I)."""
    A = np.zeros((size, p, p))
    i, j = np.tril_indices(p, -1)
    A[:, i, j] = rng.standard_normal((size, len(i)))
    df = nu - np.arange(p)
    d = np.arange(p)
    A[:, d, d] = np.sqrt(rng.chisquare(df, size=(size, p)))
    return A


def wishart_batch(rng, nu, scale, size):
    """``size`` draws from ``W_p(nu, scale)`` by the Bartlett construction."""
    scale = np.asarray(scale, dtype=float)
    p = scale.shape[0]
    if not nu > p - 1:
        raise InvalidInputError("Wishart needs nu > p - 1")
    try:
        L = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError:
        raise GeometryError("Wishart scale matrix is not positive definite") from None
    LA = L @ _bartlett(rng, nu, p, size)
    return LA @ np.swapaxes(LA, 1, 2)


def sample_wishart(p, nu, scale, seed):
    """One Wishart draw ``W_p(nu, scale)`` as a :class:`MetricObject`."""
    scale = np.asarray(scale, dtype=float)
    if scale.shape != (p, p):
        raise InvalidInputError("scale must be p x p")
    return MetricObject("spd", wishart_batch(_rng(seed), nu, scale, 1)[0])


def toeplitz_scale(p, r=0.3):
    """``(Sigma_0)_{jk} = r^{|j-k|}``."""
    idx = np.arange(p)
    return r ** np.abs(np.subtract.outer(idx, idx))


# ----------------------------------------------------------------------
# settings

def gen_setting1(n, p=3, delta=0.5, seed=0):
    """Sparse Euclidean vectors: only ``(X_1, Y_1)`` carries signal."""
    rng = _rng(seed)
    X = rng.standard_normal((n, p))
    eps = rng.standard_normal(n)
    Y = rng.standard_normal((n, p))
    with np.errstate(divide="ignore"):
        Y[:, 0] = delta * np.log(4.0 * X[:, 0] ** 2) + 0.8 * eps
    e = SpaceDescriptor.euclidean(p)
    return PairedSample(X, Y, e, e)


def _renormalise(rng, mean, scale):
    v = mean + scale * rng.standard_normal(mean.shape)
    norm = np.linalg.norm(v, axis=1)
    bad = norm < 1e-12
    if bad.any():
        v[bad] = mean[bad] + scale * rng.standard_normal((int(bad.sum()), 3))
        norm = np.linalg.norm(v, axis=1)
        if np.any(norm < 1e-12):
            raise GeometryError("zero vector after adding noise; cannot renormalise")
    return v / norm[:, None]


def gen_setting2(n, delta=0.5, sigma_x=0.2, sigma_y=0.2, k=2, seed=0):
    """Sphere S^2: folded phase dependence."""
    rng = _rng(seed)
    theta = rng.uniform(-np.pi, np.pi, n)
    mu_x = np.stack([np.cos(theta), np.sin(theta), np.zeros(n)], axis=1)
    phi = np.pi * np.abs(np.sin(k * theta))
    mu_y = np.stack([np.cos(delta * phi), np.zeros(n), np.sin(delta * phi)], axis=1)
    X = _renormalise(rng, mu_x, sigma_x)
    Y = _renormalise(rng, mu_y, sigma_y)
    s = SpaceDescriptor.sphere(3)
    return PairedSample(X, Y, s, s)


def gen_setting3(n, grid=None, delta=0.5, sigma_x=1.0, sigma_y=0.4, eta=0.5, k=2, seed=0):
    """Wasserstein: location family predictor, periodic location response."""
    q = uniform_grid(99) if grid is None else np.asarray(grid, dtype=float)
    if np.any(q < 0.01 - 1e-12) or np.any(q > 0.99 + 1e-12):
        raise InvalidInputError("grid must lie in [0.01, 0.99]")
    rng = _rng(seed)
    U = rng.uniform(0.0, 1.0, n)
    Z = rng.standard_normal(n)
    q0 = inv_normal_cdf(q)
    X = U[:, None] + sigma_x * q0[None, :]
    Y = (delta * np.sin(2.0 * np.pi * k * U))[:, None] + (
        sigma_y * np.exp(eta * Z)
    )[:, None] * q0[None, :]
    w = SpaceDescriptor.wasserstein(q)
    return PairedSample(X, Y, w, w)


def gen_setting4(n, p=4, delta=0.5, sigma_x=0.2, sigma_y=0.2, tau_nuis=0.1, seed=0):
    """Log-Cholesky SPD: X monotone in a latent U, Y folded in U.

    In the coordinate layout of :func:`spd_log_cholesky_coords` the two
    signal coordinates are the first two log-diagonal entries, and the two
    off-diagonal slots are the factor entries ``L21`` and ``L31``.
    """
    d = lc_dimension(p)
    n_off = d - p
    c1, c2 = n_off, n_off + 1  # log L11, log L22
    off1, off2 = 0, 1  # L21, L31 in row-major strict-lower order
    rng = _rng(seed)
    U = rng.standard_normal(n)
    h = np.abs(U) - np.sqrt(2.0 / np.pi)
    VX = np.zeros((n, d))
    VY = np.zeros((n, d))
    VX[:, c1] = U
    VX[:, off1] = 0.6 * U
    VY[:, c2] = delta * h
    VY[:, off2] = 0.6 * delta * h
    VX += sigma_x * rng.standard_normal((n, d))
    VY += sigma_y * rng.standard_normal((n, d))
    rest = np.setdiff1d(np.arange(d), [c2, off2])
    VY[:, rest] += tau_nuis * rng.standard_normal((n, rest.size))
    s = SpaceDescriptor.spd(p, "log_cholesky")
    return PairedSample(spd_from_log_cholesky(VX, p), spd_from_log_cholesky(VY, p), s, s)


def gen_setting5(n, p=4, nu=16.0, delta=0.5, seed=0):
    """Paired Wishart matrices sharing a latent scale factor."""
    if not nu > p - 1:
        raise InvalidInputError("s5 needs nu > p - 1")
    rng = _rng(seed)
    S0 = toeplitz_scale(p)
    U = rng.standard_normal(n)
    X = np.exp(0.5 * U)[:, None, None] * wishart_batch(rng, nu, S0, n)
    Y = np.exp(0.5 * delta * U)[:, None, None] * wishart_batch(rng, nu, S0, n)
    s = SpaceDescriptor.spd(p, "log_cholesky")
    return PairedSample(X, Y, s, s)


# ----------------------------------------------------------------------
# noise models

def transport_map(a, k):
    """``T_k(a) = a - sin(k a) / |a|`` (0 at the origin)."""
    a = np.asarray(a, dtype=float)
    absa = np.abs(a)
    safe = np.where(absa > 0, absa, 1.0)
    return np.where(absa > 0, a - np.sin(k * a) / safe, 0.0)


def _wasserstein_noise(model, n, sigma, m, x_low, x_high, zeta, seed):
    rng = _rng(seed)
    q = uniform_grid(m)
    q0 = inv_normal_cdf(q)
    X = rng.uniform(x_low, x_high, n)
    mu = zeta(X) + sigma * rng.standard_normal(n)
    if model == 1:
        rate = X / (1.0 + np.exp(X))
        t = rng.exponential(1.0 / rate)
        Y = mu[:, None] + t[:, None] * q0[None, :]
    else:
        ks = rng.choice(np.array([-3, -2, -1, 1, 2, 3]), size=n)
        base = mu[:, None] + 0.1 * q0[None, :]
        Y = np.sort(transport_map(base, ks[:, None]), axis=1)
    return PairedSample(
        X[:, None], Y, SpaceDescriptor.euclidean(1), SpaceDescriptor.wasserstein(q)
    )


def link_matrix(x, model):
    """``D(x)`` of the log-Euclidean SPD noise models."""
    x = np.asarray(x, dtype=float)
    r = (np.exp(x) - 1.0) / (np.exp(x) + 1.0)
    if model == 1:
        D = np.zeros(x.shape + (2, 2))
        D[..., 0, 0] = D[..., 1, 1] = 1.0
        D[..., 0, 1] = D[..., 1, 0] = r
        return D
    r1 = 0.4 * r
    r2 = 0.4 * np.sin(x)
    D = np.zeros(x.shape + (3, 3))
    for i in range(3):
        D[..., i, i] = 1.0
    D[..., 0, 1] = D[..., 1, 0] = r1
    D[..., 1, 2] = D[..., 2, 1] = r1
    D[..., 0, 2] = D[..., 2, 0] = r2
    return D


def symmetric_noise(rng, n, p):
    """Symmetric matrices with N(0, 1) diagonal and N(0, 1/2) off-diagonal."""
    Z = np.zeros((n, p, p))
    i, j = np.tril_indices(p, -1)
    off = rng.standard_normal((n, len(i))) * np.sqrt(0.5)
    Z[:, i, j] = off
    Z[:, j, i] = off
    d = np.arange(p)
    Z[:, d, d] = rng.standard_normal((n, p))
    return Z


def _spd_noise(model, n, sigma, seed):
    from .linalg import spd_log

    rng = _rng(seed)
    X = rng.standard_normal(n)
    D = link_matrix(X, model)
    p = D.shape[-1]
    logY = sigma * symmetric_noise(rng, n, p) + spd_log(D)
    Y = spd_matrix_exp(logY)
    Y = 0.5 * (Y + np.swapaxes(Y, 1, 2))
    return PairedSample(
        X[:, None], Y, SpaceDescriptor.euclidean(1), SpaceDescriptor.spd(p, "log_euclidean")
    )


def gen_noise_model(model, n, sigma, seed=0, m=99, x_low=0.5, x_high=3.5, zeta=_identity):
    """Noise-monotonicity models.

    ``wass_noise_1``: ``Q = mu + t Phi^{-1}``, ``mu ~ N(zeta(X), sigma^2)``,
    ``t ~ Exp(rate X / (1 + e^X))`` with ``X ~ U(x_low, x_high)``.

    ``wass_noise_2``: ``Q = T_k(mu + 0.1 Phi^{-1})`` with ``k`` uniform on
    ``{+-1, +-2, +-3}``, re-sorted to restore monotonicity.

    ``spd_logE_1`` / ``spd_logE_2``: ``log Y = sigma Z + log D(X)`` with
    ``X ~ N(0, 1)`` under the log-Euclidean metric.
    """
    if sigma < 0:
        raise InvalidInputError("sigma must be nonnegative")
    if model == "wass_noise_1":
        return _wasserstein_noise(1, n, sigma, m, x_low, x_high, zeta, seed)
    if model == "wass_noise_2":
        return _wasserstein_noise(2, n, sigma, m, x_low, x_high, zeta, seed)
    if model == "spd_logE_1":
        return _spd_noise(1, n, sigma, seed)
    if model == "spd_logE_2":
        return _spd_noise(2, n, sigma, seed)
    raise InvalidInputError(f"unknown noise model {model!r}")


def generate(config):
    """Generate the sample described by a :class:`SimConfig`."""
    c = config
    s = c.setting
    if s == "s1":
        return gen_setting1(c.n, c.p, c.delta, c.seed)
    if s == "s2":
        return gen_setting2(c.n, c.delta, c.sigma_x, c.sigma_y, c.k, c.seed)
    if s == "s3":
        return gen_setting3(
            c.n, uniform_grid(c.m), c.delta, c.sigma_x, c.sigma_y, c.eta, c.k, c.seed
        )
    if s == "s4":
        return gen_setting4(c.n, c.p, c.delta, c.sigma_x, c.sigma_y, c.tau_nuis, c.seed)
    if s == "s5":
        return gen_setting5(c.n, c.p, c.nu, c.delta, c.seed)
    return gen_noise_model(s, c.n, c.sigma, c.seed, c.m, c.x_low, c.x_high, c.zeta)
