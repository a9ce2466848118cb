"""Command line interface: ``rsklpr {generate,fit,bench,ci,losscurve}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from rsklpr.bench import (
    CURVES,
    NOISE_FAMILIES,
    SUITES,
    NoiseSpec,
    bootstrap_ci,
    generate_synthetic,
    load_defaults,
    loss_curve_table,
    run_suite,
)
from rsklpr.dataset import load_csv, save_csv, write_table
from rsklpr.errors import DataError, NumericalError
from rsklpr.kernels import BANDWIDTH_RULES, DISTANCE_KERNELS, BandwidthSpec
from rsklpr.regression import METHODS, EstimatorConfig, predict
from rsklpr.similarity import K2_VARIANTS

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("rsklpr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_estimator_args(p):
    p.add_argument("--method", choices=METHODS, default="rsklpr")
    p.add_argument("--neighbors", type=int, default=50)
    p.add_argument("--degree", type=int, choices=(0, 1, 2), default=1)
    p.add_argument("--k1", choices=DISTANCE_KERNELS, default=None, help="distance kernel (default depends on method)")
    p.add_argument("--k2", choices=K2_VARIANTS, default="conditional")
    p.add_argument("--bandwidth", choices=BANDWIDTH_RULES, default="scott")
    p.add_argument("--bandwidth-values", type=_float_list, default=None, help="per-dimension values for --bandwidth fixed")
    p.add_argument("--cv-grid", type=_float_list, default=None, help="Scott multipliers for --bandwidth cv_grid")
    p.add_argument("--cv-folds", type=int, default=5)
    p.add_argument("--iterations", type=int, default=5, help="robust_lowess reweighting passes")
    p.add_argument("--queries", default="grid:100", help="grid:M, data, or a CSV of x1..xd columns")


def build_parser():
    parser = _Parser(prog="rsklpr", description="Robust local polynomial regression with similarity kernels.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic data set")
    g.add_argument("--curve", choices=CURVES, default="sine_hetero")
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--noise", choices=NOISE_FAMILIES, default="gaussian_hetero")
    g.add_argument("--lambda", dest="rate", type=float, default=None, help="exponential rate")
    g.add_argument("--sigma", type=float, default=None)
    g.add_argument("--mu", type=float, default=None)
    g.add_argument("--shape", type=float, default=None)
    g.add_argument("--scale", type=float, default=None)
    g.add_argument("--center", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--outlier-fraction", type=float, default=0.0)
    g.add_argument("--outlier-shift", type=float, default=5.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--truth-out", default=None, help="also write ground truth at the training points")

    f = sub.add_parser("fit", help="fit an estimator and write predictions")
    f.add_argument("--data", required=True)
    _add_estimator_args(f)
    f.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", required=True, help=f"one of {', '.join(SUITES)}")
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--config", default=None, help="JSON file of overrides merged into the suite defaults")
    b.add_argument("--out", required=True)

    c = sub.add_parser("ci", help="bootstrap confidence intervals")
    c.add_argument("--data", required=True)
    _add_estimator_args(c)
    c.add_argument("--replicates", type=int, default=500)
    c.add_argument("--level", type=float, default=0.95)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    lc = sub.add_parser("losscurve", help="loss x density curves over residuals")
    lc.add_argument("--sigmas", type=_float_list, default=[1.0, 2.0, 3.0])
    lc.add_argument("--residual-max", type=float, default=10.0)
    lc.add_argument("--points", type=int, default=201)
    lc.add_argument("--out", required=True)
    return parser


def _estimator_config(args, data):
    if args.bandwidth == "fixed":
        bw = BandwidthSpec("fixed", fixed_values=args.bandwidth_values)
    elif args.bandwidth == "cv_grid":
        bw = BandwidthSpec("cv_grid", cv_grid=args.cv_grid or (0.25, 0.5, 1.0, 2.0, 4.0), cv_folds=args.cv_folds)
    else:
        bw = BandwidthSpec(args.bandwidth)
    k2 = "none" if args.method != "rsklpr" else args.k2
    iterations = args.iterations if args.method == "robust_lowess" else 0
    if args.neighbors > data.T:
        raise UsageError(f"--neighbors {args.neighbors} exceeds the {data.T} data rows")
    return EstimatorConfig(args.method, args.neighbors, args.degree, args.k1, k2, bw, iterations)


def _queries(spec, data):
    if spec == "data":
        return np.array(data.predictors)
    if spec.startswith("grid:"):
        try:
            m = int(spec[5:])
        except ValueError:
            raise UsageError(f"bad --queries {spec!r}") from None
        if m < 1:
            raise UsageError("grid size must be >= 1")
        lo, hi = data.predictors.min(axis=0), data.predictors.max(axis=0)
        axes = [np.linspace(a, b, m) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([g.ravel() for g in mesh])
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"--queries must be grid:M, data, or an existing CSV file; got {spec!r}")
    rows = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))
    if rows.shape[1] != data.d:
        raise DataError(f"{path}: queries have {rows.shape[1]} columns, data has d={data.d}")
    return rows


def _cmd_generate(args):
    params = {}
    for key, val in (("rate", args.rate), ("sigma", args.sigma), ("mu", args.mu), ("shape", args.shape), ("scale", args.scale)):
        if val is not None:
            params[key] = val
    known = load_defaults()["noise"][args.noise]
    bad = set(params) - set(known)
    if bad:
        raise UsageError(f"noise {args.noise} does not take {', '.join('--' + ('lambda' if b == 'rate' else b) for b in sorted(bad))}")
    noise = NoiseSpec(args.noise, params, args.center, args.outlier_fraction, args.outlier_shift)
    data, truth = generate_synthetic(args.curve, args.n, noise, args.seed)
    save_csv(args.out, data)
    if args.truth_out:
        header = [f"x{j}" for j in range(1, data.d + 1)] + ["truth"]
        write_table(args.truth_out, header, np.column_stack([data.predictors, truth]))


def _cmd_fit(args):
    data = load_csv(args.data)
    cfg = _estimator_config(args, data)
    q = _queries(args.queries, data)
    pred = predict(cfg, data, q)
    header = [f"x{j}" for j in range(1, data.d + 1)] + ["y_hat"]
    write_table(args.out, header, np.column_stack([q, pred]))


def _cmd_ci(args):
    data = load_csv(args.data)
    cfg = _estimator_config(args, data)
    q = _queries(args.queries, data)
    pred = predict(cfg, data, q)
    ci = bootstrap_ci(data, cfg, q, args.replicates, args.level, args.seed)
    if ci.skipped:
        log.warning("%d of %d bootstrap replicates skipped", ci.skipped, ci.replicates)
    header = [f"x{j}" for j in range(1, data.d + 1)] + ["y_hat", "ci_lo", "ci_hi"]
    write_table(args.out, header, np.column_stack([q, pred, ci.lower, ci.upper]))


def _cmd_bench(args):
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; valid suites: {', '.join(SUITES)}")
    overrides = None
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
    run_suite(args.suite, overrides, args.seeds, args.out, args.workers)


def _cmd_losscurve(args):
    if not args.sigmas:
        raise UsageError("--sigmas must list at least one value")
    table = loss_curve_table(args.sigmas, args.residual_max, args.points)
    write_table(args.out, ["residual", "sigma", "value"], table)


_COMMANDS = {
    "generate": _cmd_generate,
    "fit": _cmd_fit,
    "bench": _cmd_bench,
    "ci": _cmd_ci,
    "losscurve": _cmd_losscurve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rsklpr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"rsklpr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"rsklpr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"rsklpr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rsklpr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
