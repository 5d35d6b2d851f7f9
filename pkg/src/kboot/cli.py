"""Command-line interface.

Every artifact starts with a header holding the schema version, package
version, resolved configuration and a ``command`` list: feeding that list
back to ``kboot`` reproduces the artifact byte for byte (outputs are
written wherever ``--output``/``--outdir`` point; those flags are not part
of the header).

Exit codes: 0 success, 1 failed validation, 2 configuration error,
3 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapSpec, default_workers, multi_kappa_test, one_sample_mean_test
from .data_io import (
    TensorSpec,
    format_number,
    impute_mean,
    read_table,
    slice_tensor,
    synthetic_traffic,
)
from .exceptions import ConfigError, DataError
from .experiments import (
    DESK_SCALE,
    DEFAULT_KAPPAS,
    FULL_SCALE,
    CoverageCell,
    UniformityConfig,
    coverage_scan,
    non_increasing_within,
    run_uniformity,
)
from .sampling import CovarianceSpec, ModelSpec, SeedSpec, WeightScheme, sample_model
from .validation import SUITES, run_suite

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

# options that decide where output goes, not what it contains
_LOCATION = {"output", "outdir", "help"}

log = logging.getLogger("kboot")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> tuple:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


# ----------------------------------------------------------------------------
# argument groups
# ----------------------------------------------------------------------------

def _add_common(p, fmt=True):
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    if fmt:
        p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_bootstrap(p):
    p.add_argument("--kappa", type=int, default=1)
    p.add_argument("--method", choices=("multiplier", "empirical", "gaussian_analog"),
                   default="multiplier")
    p.add_argument("--weights", choices=("gaussian", "rademacher", "mammen", "std_beta"),
                   default="gaussian")
    p.add_argument("--beta-shape", type=float, nargs=2, default=(0.5, 1.5),
                   metavar=("A", "B"), help="Beta shape for std_beta weights")
    p.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--sided", choices=("upper", "two_sided"), default="upper")


def _add_data(p):
    p.add_argument("--data", required=True, help="delimited data file")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="first data line is a header")
    p.add_argument("--row-labels", action="store_true", help="first column holds labels")


def _add_model(p, n=DESK_SCALE["n"], pdim=DESK_SCALE["p"]):
    p.add_argument("--model", choices=("normal", "student_t"), default="normal")
    p.add_argument("--rho", type=float, default=0.2)
    p.add_argument("--df", type=float, default=10.0)
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--p", type=int, default=pdim)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="kboot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kboot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("pvalue", help="bootstrap p-value for a complete data matrix")
    _add_data(p)
    _add_bootstrap(p)
    _add_common(p)

    p = sub.add_parser("test", help="impute, slice and test a table (traffic workflow)")
    _add_data(p)
    _add_bootstrap(p)
    p.add_argument("--impute-axis", choices=("column", "row"), required=True)
    p.add_argument("--tensor", type=_int_list, default=None, metavar="S,D,W",
                   help="segments,days,windows of a flattened tensor table")
    p.add_argument("--windows", type=_int_list, default=None, metavar="I[,J]",
                   help="window index, or two indices to test their difference (J - I)")
    p.add_argument("--all-kappas", action="store_true",
                   help="report every kappa in 1..floor((p+1)/2)")
    _add_common(p)

    p = sub.add_parser("simulate", help="write a simulated data file")
    p.add_argument("--kind", choices=("model", "traffic"), default="model")
    _add_model(p)
    p.add_argument("--segments", type=int, default=214)
    p.add_argument("--days", type=int, default=61)
    p.add_argument("--n-windows", type=int, default=2)
    p.add_argument("--missing-rate", type=float, default=0.0129)
    p.add_argument("--shift", type=float, default=0.0)
    _add_common(p, fmt=False)

    p = sub.add_parser("uniformity", help="p-value uniformity study")
    _add_model(p)
    p.add_argument("--kappas", type=_int_list, default=DEFAULT_KAPPAS)
    p.add_argument("--B", type=int, default=DESK_SCALE["B"])
    p.add_argument("--N", type=int, default=DESK_SCALE["N"])
    p.add_argument("--weights", choices=("gaussian", "rademacher", "mammen", "std_beta"),
                   default="gaussian")
    p.add_argument("--paper-scale", action="store_true",
                   help=f"use n, p, B, N = {tuple(FULL_SCALE.values())}")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("coverage", help="rejection frequency under the null across n")
    _add_model(p)
    p.set_defaults(rho=0.5, p=50)
    p.add_argument("--n-list", type=_int_list, default=(50, 200, 800))
    p.add_argument("--kappa", type=int, default=3)
    p.add_argument("--methods", type=_str_list,
                   default=("multiplier", "empirical", "gaussian_analog"))
    p.add_argument("--weights", choices=("gaussian", "rademacher", "mammen", "std_beta"),
                   default="gaussian")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--B", type=int, default=500)
    _add_common(p, fmt=False)

    p = sub.add_parser("validate", help="numerical checks of the inequality machinery")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--bound-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    _add_common(p, fmt=False)
    return parser


# ----------------------------------------------------------------------------
# header and output
# ----------------------------------------------------------------------------

def _subparser(parser, name):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def _format_value(v):
    if isinstance(v, (list, tuple)):
        return [_format_value(x) for x in v]
    if isinstance(v, float):
        return repr(v)
    return str(v)


def resolved_command(parser, args) -> list[str]:
    """Canonical argv reproducing ``args`` (location flags omitted)."""
    argv = [args.command]
    for act in _subparser(parser, args.command)._actions:
        if not act.option_strings or act.dest in _LOCATION:
            continue
        flag = max(act.option_strings, key=len)
        val = getattr(args, act.dest)
        if isinstance(act, argparse._StoreTrueAction):
            if val:
                argv.append(flag)
            continue
        if val is None:
            continue
        if act.nargs is not None and act.nargs not in ("?",):
            argv.append(flag)
            argv.extend(_format_value(list(val)))
        elif isinstance(val, (list, tuple)):
            argv.extend([flag, ",".join(_format_value(list(val)))])
        else:
            argv.extend([flag, _format_value(val)])
    return argv


def _config(parser, args) -> dict:
    skip = _LOCATION | {"command"}
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _header(parser, args) -> dict:
    return {"schema_version": SCHEMA_VERSION, "version": __version__,
            "command": resolved_command(parser, args), "config": _config(parser, args),
            "seed": args.seed}


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default, allow_nan=False) + "\n"


def _csv_text(header: dict, columns, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, default=_json_default, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_number(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def _bootstrap_spec(args, kappa=None) -> BootstrapSpec:
    a, b = args.beta_shape
    return BootstrapSpec(method=args.method, weights=WeightScheme(args.weights, a, b),
                         kappa=args.kappa if kappa is None else kappa, B=args.B,
                         alpha=args.alpha, sided=args.sided, seed=args.seed)


def _read(args):
    return read_table(args.data, delimiter=args.delimiter, has_header=args.header,
                      has_row_labels=args.row_labels)


_REPORT_COLUMNS = ["method", "weights", "kappa", "B", "alpha", "sided", "seed",
                   "statistic", "p_value", "critical_value", "reject"]


def _report_row(d: dict) -> list:
    w = d["weights"]
    return [d["method"], w["kind"] if w else "", d["kappa"], d["B"], d["alpha"],
            d["sided"], d["seed"], d["statistic"], d["p_value"], d["critical_value"],
            str(d["reject"]).lower()]


def cmd_pvalue(parser, args, workers) -> int:
    table = _read(args)
    if table.n_missing:
        raise DataError(f"{args.data} has {table.n_missing} missing values; "
                        "use the 'test' command with --impute-axis")
    spec = _bootstrap_spec(args)
    log.info("pvalue: n=%d p=%d method=%s B=%d", *table.shape, spec.method, spec.B)
    report = one_sample_mean_test(table.values, spec, n_jobs=workers).to_dict()
    header = _header(parser, args)
    if args.format == "csv":
        _emit(_csv_text(header, _REPORT_COLUMNS, [_report_row(report)]), args.output)
    else:
        _emit(to_json({**header, **report}), args.output)
    return EXIT_OK


def cmd_test(parser, args, workers) -> int:
    table = _read(args)
    log.info("test: read %dx%d table, missing rate %.6f", *table.shape, table.missing_rate)
    X = impute_mean(table, axis=args.impute_axis)
    if args.tensor is not None:
        if len(args.tensor) != 3:
            raise ConfigError("--tensor needs three sizes S,D,W")
        spec = TensorSpec(*args.tensor, slice=args.windows or (0,))
        X = slice_tensor(X, spec)
        log.info("test: sliced tensor to %dx%d", *X.shape)
    elif args.windows is not None:
        raise ConfigError("--windows requires --tensor")
    p = X.shape[1]
    kappas = range(1, (p + 1) // 2 + 1) if args.all_kappas else [args.kappa]
    base = _bootstrap_spec(args)
    reports = multi_kappa_test(X, base, list(kappas), n_jobs=workers)
    rows = [reports[k].to_dict() for k in kappas]
    header = _header(parser, args)
    if args.format == "csv":
        _emit(_csv_text(header, _REPORT_COLUMNS, [_report_row(r) for r in rows]), args.output)
    else:
        body = {"n": X.shape[0], "p": p, "missing_count": table.n_missing,
                "missing_rate": table.missing_rate, "reports": rows}
        _emit(to_json({**header, **body}), args.output)
    return EXIT_OK


def _model_spec(args) -> ModelSpec:
    return ModelSpec(args.model, CovarianceSpec.ar1(args.rho), args.n, args.p, args.df)


def cmd_simulate(parser, args, workers) -> int:
    header = "# " + json.dumps(_header(parser, args), sort_keys=True) + "\n"
    buf = io.StringIO()
    if args.kind == "model":
        X = sample_model(_model_spec(args), SeedSpec(args.seed))
        w = csv.writer(buf, lineterminator="\n")
        for row in X:
            w.writerow([format_number(v) for v in row])
    else:
        t = synthetic_traffic(args.segments, args.days, args.n_windows,
                              args.missing_rate, args.shift, args.seed)
        tmp = io.StringIO()
        _write_raw_to(tmp, t)
        buf.write(tmp.getvalue())
    _emit(header + buf.getvalue(), args.output)
    return EXIT_OK


def _write_raw_to(fh, t):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["row"] + list(t.col_labels))
    for label, row in zip(t.row_labels, t.values):
        w.writerow([label] + [format_number(v) for v in row])


def cmd_uniformity(parser, args, workers) -> int:
    if args.paper_scale:
        args.n, args.p, args.B, args.N = (FULL_SCALE[k] for k in ("n", "p", "B", "N"))
    cfg = UniformityConfig(model=_model_spec(args), kappas=args.kappas, B=args.B, N=args.N,
                           weights=WeightScheme(args.weights), seed=args.seed)
    log.info("uniformity: %s", cfg.to_dict())
    report = run_uniformity(cfg, n_jobs=workers)
    log.info("uniformity: %d repetitions in %.1fs", cfg.N, report.runtime["seconds"])
    header = _header(parser, args)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    prow = [[r] + [float(report.pvalues[k][r]) for k in cfg.kappas] for r in range(cfg.N)]
    (out / "pvalues.csv").write_text(
        _csv_text(header, ["rep"] + [f"kappa_{k}" for k in cfg.kappas], prow))
    (out / "qq.csv").write_text(
        _csv_text(header, ["kappa", "theoretical_q", "sample_q"], report.qq()))
    (out / "summary.json").write_text(to_json({**header, "experiment": cfg.to_dict(),
                                               **report.to_dict()}))
    return EXIT_OK


def cmd_coverage(parser, args, workers) -> int:
    cells = [CoverageCell(n, args.p, args.kappa, m, WeightScheme(args.weights))
             for m in args.methods for n in args.n_list]
    report = coverage_scan(cells, alpha=args.alpha, reps=args.reps, seed=args.seed, B=args.B,
                           model=_model_spec(args), n_jobs=workers)
    trends = {}
    for m in args.methods:
        t = report.trend(args.p, args.kappa, m, args.weights)
        trends[m] = non_increasing_within([r.error for r in t], [r.se for r in t])
    _emit(to_json({**_header(parser, args), **report.to_dict(),
                   "non_increasing_within_2se": trends}), args.output)
    return EXIT_OK


def cmd_validate(parser, args, workers) -> int:
    checks = run_suite(args.suite, args.seed, args.bound_scale)
    passed = all(c.passed for c in checks)
    for c in checks:
        if not c.passed:
            log.warning("validate: FAILED %s (estimate %r, bound %r)", c.check, c.estimate, c.bound)
    _emit(to_json({**_header(parser, args), "passed": passed,
                   "n_checks": len(checks), "n_failed": sum(not c.passed for c in checks),
                   "checks": [c.to_dict() for c in checks]}), args.output)
    return EXIT_OK if passed else EXIT_FAILED


COMMANDS = {"pvalue": cmd_pvalue, "test": cmd_test, "simulate": cmd_simulate,
            "uniformity": cmd_uniformity, "coverage": cmd_coverage, "validate": cmd_validate}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        workers = default_workers()
        return COMMANDS[args.command](parser, args, workers)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"kboot: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"kboot: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
