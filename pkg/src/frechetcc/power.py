"""Monte Carlo power/size studies.

Every replicate derives its data seed and its test seeds from
``(seed, n, delta, r)`` alone, so results do not depend on how replicates
are spread over worker processes.
"""

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import chatterjee_test, energy_dcov_test, pearson_test
from .bootstrap import mix64, wild_bootstrap_test
from .errors import FCCError, InvalidInputError
from .partition import build_partition
from .simgen import PARTITION_DEFAULTS, SimConfig, generate

METHODS = ("fcc", "energy", "pearson", "chatterjee")
POWER_SETTINGS = ("s1", "s2", "s3", "s4", "s5")
CSV_HEADER = "method,n,delta,rejections,replications,rate,se,errors"


@dataclass(frozen=True)
class PowerRow:
    """Rejection count for one (method, n, delta) cell.

    ``replications`` counts replicates that produced a p-value;
    failed ones are tallied in ``errors`` and excluded from the rate.
    """

    method: str
    n: int
    delta: float
    rejections: int
    replications: int
    errors: int = 0

    @property
    def rate(self):
        return self.rejections / self.replications if self.replications else float("nan")

    @property
    def se(self):
        if not self.replications:
            return float("nan")
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.replications)

    def csv_line(self):
        return (
            f"{self.method},{self.n},{self.delta!r},{self.rejections},"
            f"{self.replications},{self.rate!r},{self.se!r},{self.errors}"
        )


@dataclass
class PowerCurve:
    setting: str
    alpha: float
    rows: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            buf.write(row.csv_line() + "\n")
        return buf.getvalue()

    def rate(self, method, n, delta=None):
        for row in self.rows:
            if row.method == method and row.n == n and (delta is None or row.delta == delta):
                return row.rate
        raise KeyError((method, n, delta))


@dataclass(frozen=True)
class PowerOptions:
    setting: str
    boot: int = 500
    alpha: float = 0.05
    methods: tuple = ("fcc",)
    H: int = None
    min_cell: int = None
    multiplier: str = "rademacher"
    norm: str = "identity"
    scalar_slice: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.setting not in POWER_SETTINGS:
            raise InvalidInputError(
                f"power studies support settings {', '.join(POWER_SETTINGS)}"
            )
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InvalidInputError(f"unknown method(s): {', '.join(unknown)}")
        if not self.methods:
            raise InvalidInputError("no methods selected")
        scalar_only = [m for m in self.methods if m in ("pearson", "chatterjee")]
        if scalar_only and self.setting != "s1":
            raise InvalidInputError(
                f"{', '.join(scalar_only)} need scalar pairs (setting s1 first coordinates)"
            )
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if int(self.boot) < 1:
            raise InvalidInputError("boot must be at least 1")
        if self.scalar_slice and self.setting != "s1":
            raise InvalidInputError("scalar slice applies to setting s1 only")

    def partition_params(self):
        H, mc = PARTITION_DEFAULTS[self.setting]
        return (self.H or H, self.min_cell or mc)


def replicate_seed(seed, n, delta, r):
    """Data seed of replicate ``r`` in the ``(n, delta)`` cell."""
    d = int(round(float(delta) * 1_000_000))
    return mix64(mix64(mix64(seed, n), d), r)


def run_replicate(opts, n, delta, r):
    """p-values (or error strings) of every method on one generated sample."""
    data_seed = replicate_seed(opts.seed, n, delta, r)
    out = {}
    try:
        sample = generate(SimConfig.for_setting(opts.setting, n=n, delta=delta, seed=data_seed))
    except (FCCError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return {m: f"{type(exc).__name__}: {exc}" for m in opts.methods}
    full = sample
    if opts.scalar_slice:
        sample = sample.scalar_slice()
    H, min_cell = opts.partition_params()
    for k, method in enumerate(opts.methods):
        test_seed = mix64(data_seed, k + 1)
        try:
            if method == "fcc":
                part = build_partition(sample.X, sample.space_X, H, min_cell)
                res = wild_bootstrap_test(
                    sample.X, sample.Y, sample.space_Y, part, opts.boot,
                    opts.multiplier, opts.norm, test_seed,
                )
            elif method == "energy":
                res = energy_dcov_test(
                    sample.X, sample.Y, sample.space_X, sample.space_Y, opts.boot, test_seed
                )
            else:
                x, y = full.first_coordinates()
                test = pearson_test if method == "pearson" else chatterjee_test
                res = test(x, y, opts.boot, test_seed)
            out[method] = res.p_value
        except (FCCError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out[method] = f"{type(exc).__name__}: {exc}"
    return out


def _run_block(args):
    opts, n, delta, rs = args
    return [run_replicate(opts, n, delta, r) for r in rs]


def _blocks(reps, nblocks):
    size = max(1, math.ceil(reps / max(1, nblocks)))
    return [range(i, min(i + size, reps)) for i in range(0, reps, size)]


def power_study(opts, n_list, deltas, reps, threads=1, progress=None):
    """Rejection rates of each method over ``reps`` replications per (n, delta).

    Returns a :class:`PowerCurve` with rows ordered by delta, n, then
    method in ``opts.methods`` order.
    """
    reps = int(reps)
    if reps < 0:
        raise InvalidInputError("reps must be nonnegative")
    n_list = [int(n) for n in n_list]
    if any(n < 2 for n in n_list):
        raise InvalidInputError("sample sizes must be at least 2")
    deltas = [float(d) for d in deltas]
    curve = PowerCurve(opts.setting, opts.alpha)
    if reps == 0:
        return curve
    threads = max(1, int(threads or 1))
    jobs = []
    for delta in deltas:
        for n in n_list:
            for rs in _blocks(reps, threads):
                jobs.append((opts, n, delta, rs))
    if threads == 1:
        results = map(_run_block, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=threads)
        results = pool.map(_run_block, jobs)
    try:
        tallies = {}
        for job, block in zip(jobs, results):
            _, n, delta, _ = job
            for out in block:
                for method in opts.methods:
                    t = tallies.setdefault((delta, n, method), [0, 0, 0])
                    p = out[method]
                    if isinstance(p, str):
                        t[2] += 1
                    else:
                        t[0] += int(p <= opts.alpha)
                        t[1] += 1
            if progress is not None:
                progress(n, delta, len(block))
    finally:
        if pool is not None:
            pool.shutdown()
    for delta in deltas:
        for n in n_list:
            for method in opts.methods:
                rej, ok, err = tallies[(delta, n, method)]
                curve.rows.append(PowerRow(method, n, delta, rej, ok, err))
    return curve


def default_threads():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover
        return os.cpu_count() or 1
