"""Command-line interface: ``frechetcc {estimate,test,power,nulltable}``.

Exit codes: 0 success, 2 invalid input, 3 degenerate statistic, 4 I/O
failure.
"""

import argparse
import json
import sys

import numpy as np
from scipy import special

from .bootstrap import wild_bootstrap_test
from .embeddings import embed_responses
from .errors import FCCError, InvalidInputError
from .fcc import fcc_estimate
from .null_limits import (
    WEIGHTED_CHI2_DRAWS,
    WEIGHTED_CHI2_SEED,
    chi2_upper_tail,
    fixed_m_spectrum,
    studentized_diagnostic,
)
from .partition import build_partition, quantile_bins
from .power import METHODS, POWER_SETTINGS, PowerOptions, default_threads, power_study
from .simgen import PARTITION_DEFAULTS, SETTINGS, SimConfig, generate, load_config
from .textio import read_objects

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4
DEFAULT_H, DEFAULT_MIN_CELL = 15, 5
GAMMA_HEADER = "index,gamma"
DIAG_HEADER = "stat,mu_hat,sigma_hat,z"
TAIL_HEADER = "source,statistic,p_value,se"


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _name_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_common(p):
    p.add_argument("--out", help="write the result here instead of standard output")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument(
        "--threads", type=_positive, default=None,
        help="worker processes (default: available cores); results do not depend on it",
    )


def _add_sample_source(p):
    g = p.add_argument_group("sample source (files, config or setting)")
    g.add_argument("--x", help="predictor sample file")
    g.add_argument("--y", help="response sample file")
    g.add_argument("--config", help="simulation config file (key = value lines)")
    g.add_argument("--setting", choices=SETTINGS, help="simulate from a built-in setting")
    g.add_argument("--n", type=_positive, help="sample size for --setting/--config")
    g.add_argument("--delta", type=float, help="dependence parameter for --setting")
    g.add_argument("--sigma", type=float, help="noise level for the noise models")
    g.add_argument(
        "--data-seed", type=int, default=None,
        help="seed for simulated data (default: --seed)",
    )
    q = p.add_argument_group("partition")
    q.add_argument("--H", type=_positive, help="number of prototypes")
    q.add_argument("--min-cell", type=_positive, help="minimum cell size")
    q.add_argument(
        "--M", type=_positive,
        help="equal-count cells on a scalar predictor instead of prototypes",
    )
    q.add_argument("--partition-out", help="write the partition CSV here")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="frechetcc",
        description="Fréchet correlation coefficient: estimation, testing and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the coefficient (JSON)")
    _add_sample_source(p)
    _add_common(p)

    p = sub.add_parser("test", help="wild bootstrap test (JSON)")
    _add_sample_source(p)
    _add_common(p)
    p.add_argument("--boot", "--B", dest="boot", type=int, default=500,
                   help="bootstrap replicates (default 500)")
    p.add_argument("--multiplier", choices=("rademacher", "gaussian", "mammen"),
                   default="rademacher")
    p.add_argument("--norm", choices=("identity", "plugin"), default="identity")
    p.add_argument("--replicates", action="store_true",
                   help="include the bootstrap replicates in the JSON")

    p = sub.add_parser("power", help="Monte Carlo rejection rates (CSV)")
    _add_common(p)
    p.add_argument("--setting", choices=POWER_SETTINGS, required=True)
    p.add_argument("--n-list", type=_int_list, default=[50, 80, 100, 150])
    p.add_argument("--delta", type=_float_list, default=[0.5],
                   help="comma-separated dependence levels (default 0.5)")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--boot", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--methods", type=_name_list, default=("fcc",),
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--H", type=_positive)
    p.add_argument("--min-cell", type=_positive)
    p.add_argument("--multiplier", choices=("rademacher", "gaussian", "mammen"),
                   default="rademacher")
    p.add_argument("--norm", choices=("identity", "plugin"), default="identity")
    p.add_argument("--scalar-slice", action="store_true",
                   help="s1 only: run FCC/energy on the first coordinate pair")
    p.add_argument("--svg", help="also draw the power curve to this file")

    p = sub.add_parser("nulltable", help="plug-in null spectrum and diagnostic (CSV)")
    _add_sample_source(p)
    _add_common(p)
    p.add_argument("--draws", type=_positive, default=WEIGHTED_CHI2_DRAWS,
                   help="Monte Carlo draws for the weighted chi-square tail")
    p.add_argument("--svg", help="also draw the spectrum to this file")
    return parser


# ----------------------------------------------------------------------

def _load_sample(args):
    sources = sum(x is not None for x in (args.config, args.setting)) + (
        args.x is not None or args.y is not None
    )
    if sources != 1:
        raise InvalidInputError("give exactly one of --x/--y, --config or --setting")
    if args.x is not None or args.y is not None:
        if args.x is None or args.y is None:
            raise InvalidInputError("--x and --y must be given together")
        space_X, X = read_objects(args.x)
        space_Y, Y = read_objects(args.y)
        if len(X) != len(Y):
            raise InvalidInputError(f"--x has {len(X)} objects, --y has {len(Y)}")
        return X, Y, space_X, space_Y, (DEFAULT_H, DEFAULT_MIN_CELL)
    seed = args.seed if args.data_seed is None else args.data_seed
    overrides = {"n": args.n, "delta": args.delta, "sigma": args.sigma}
    if args.config is not None:
        cfg = load_config(args.config)
        cfg = cfg.with_(**{k: v for k, v in overrides.items() if v is not None})
        if args.data_seed is not None:
            cfg = cfg.with_(seed=args.data_seed)
    else:
        cfg = SimConfig.for_setting(args.setting, seed=seed, **overrides)
    sample = generate(cfg)
    return sample.X, sample.Y, sample.space_X, sample.space_Y, PARTITION_DEFAULTS[cfg.setting]


def _partition(args, X, space_X, defaults):
    if args.M is not None:
        if args.H is not None:
            raise InvalidInputError("--M and --H are alternatives")
        if space_X.kind != "euclidean" or space_X.dim != 1:
            raise InvalidInputError("--M needs a scalar Euclidean predictor")
        part = quantile_bins(X[:, 0], args.M)
    else:
        H = args.H or defaults[0]
        min_cell = args.min_cell or defaults[1]
        part = build_partition(X, space_X, H, min_cell)
    if args.partition_out:
        with open(args.partition_out, "w", encoding="utf-8") as fh:
            fh.write(part.to_csv())
    return part


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


def cmd_estimate(args):
    X, Y, space_X, space_Y, defaults = _load_sample(args)
    part = _partition(args, X, space_X, defaults)
    est = fcc_estimate(X, Y, space_Y, part)
    _emit(args, _json(est.to_dict()))


def cmd_test(args):
    X, Y, space_X, space_Y, defaults = _load_sample(args)
    part = _partition(args, X, space_X, defaults)
    res = wild_bootstrap_test(
        X, Y, space_Y, part, args.boot, args.multiplier, args.norm, args.seed
    )
    _emit(args, _json(res.to_dict(include_replicates=args.replicates)))


def cmd_power(args):
    opts = PowerOptions(
        setting=args.setting, boot=args.boot, alpha=args.alpha, methods=args.methods,
        H=args.H, min_cell=args.min_cell, multiplier=args.multiplier, norm=args.norm,
        scalar_slice=args.scalar_slice, seed=args.seed,
    )
    threads = args.threads or default_threads()
    curve = power_study(opts, args.n_list, args.delta, args.reps, threads=threads)
    _emit(args, curve.to_csv())
    if args.svg:
        from .plotting import plot_power_curve

        plot_power_curve(curve, args.svg)


def nulltable_text(X, Y, space_Y, part, draws=WEIGHTED_CHI2_DRAWS, seed=WEIGHTED_CHI2_SEED):
    """CSV text of the null spectrum, the diagnostic and the tail table.

    Three blocks separated by blank lines: ``index,gamma``;
    ``stat,mu_hat,sigma_hat,z``; ``source,statistic,p_value,se``.
    Returns ``(text, spectrum)``.
    """
    if space_Y.kind == "sphere":
        raise InvalidInputError("null-limit diagnostics need a flat response embedding")
    est = fcc_estimate(X, Y, space_Y, part)
    emb = embed_responses(space_Y, Y)
    form = "wasserstein" if space_Y.kind == "wasserstein" else "manifold"
    spec = fixed_m_spectrum(emb, part, est.v_f_hat, form=form)
    diag = studentized_diagnostic(emb, part, est.rho_hat, est.v_f_hat)
    stat = est.n * est.rho_hat
    tail = spec.tail(stat, draws=draws, seed=seed)

    lines = [GAMMA_HEADER]
    lines += [f"{i},{g!r}" for i, g in enumerate(np.sort(spec.eigenvalues)[::-1].tolist())]
    lines += ["", DIAG_HEADER,
              f"{diag.stat!r},{diag.mu_hat!r},{diag.sigma_hat!r},{diag.z_score!r}"]
    lines += ["", TAIL_HEADER, f"{spec.source},{stat!r},{tail.p!r},{tail.se!r}"]
    if emb.dim == 1 and part.M > 1:
        lines.append(f"chi2_df{part.M - 1},{stat!r},{chi2_upper_tail(stat, part.M - 1)!r},0.0")
    normal_p = float(special.ndtr(-diag.z_score))
    lines.append(f"studentized_normal,{diag.z_score!r},{normal_p!r},0.0")
    return "\n".join(lines) + "\n", spec


def cmd_nulltable(args):
    X, Y, space_X, space_Y, defaults = _load_sample(args)
    if args.M is None and args.min_cell is None:
        defaults = (defaults[0], max(2, defaults[1]))
    part = _partition(args, X, space_X, defaults)
    text, spec = nulltable_text(X, Y, space_Y, part, draws=args.draws)
    _emit(args, text)
    if args.svg:
        from .plotting import plot_spectrum

        plot_spectrum(spec.eigenvalues, args.svg)


COMMANDS = {
    "estimate": cmd_estimate,
    "test": cmd_test,
    "power": cmd_power,
    "nulltable": cmd_nulltable,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except FCCError as exc:
        print(f"frechetcc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"frechetcc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
