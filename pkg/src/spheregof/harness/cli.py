"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..exceptions import (
    DimensionMismatch, EmptyAfterFilter, EmptyInput, EstimationError, FitFailed, InvalidConfig,
    InvalidSpec, NotUnitNorm, OutOfRange, ParseError, UnsupportedDimension, ZeroVector,
)
from ..geometry import Sample
from ..resampling import TestConfig, test_composite, test_simple
from ..samplers import SeedStream, sample, spec_from_dict, spec_to_dict
from ..statistic import EnergySR, StableCF, compute_statistic, kernel_from_dict
from .geomagia import ingest_geomagia_csv, run_real_data_analysis
from .power import ExperimentSpec, default_workers, run_power_study
from .report import emit_report, render_csv
from .scenarios import PRESETS, VMF_GAMMAS, preset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json_arg(text: str):
    """Inline JSON or ``@path`` to a JSON file."""
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None


def read_points(path) -> Sample:
    """Points file: one point per line, comma separated, optional header row."""
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        try:
            a = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from None
    return Sample(a)


def write_points(x: Sample, out) -> None:
    header = ",".join(f"x{i + 1}" for i in range(x.d))
    lines = [header] + [",".join(repr(float(v)) for v in row) for row in x.data]
    text = "\n".join(lines) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _kernel(args, cfg: dict):
    if args.energy is not None:
        return EnergySR(args.energy)
    if args.gamma is not None:
        return StableCF(args.gamma, args.xi if args.xi is not None else 2.0)
    if "kernel" in cfg:
        return kernel_from_dict(cfg["kernel"])
    return StableCF(1.0, args.xi if args.xi is not None else 2.0)


def _add_kernel_flags(p):
    p.add_argument("--gamma", type=float, help="stable kernel scale (default 1)")
    p.add_argument("--xi", type=float, help="stable kernel exponent in (0, 2] (default 2)")
    p.add_argument("--energy", type=float, metavar="A", help="use the energy kernel -|z|^A instead")


def _add_test_flags(p):
    p.add_argument("--config", help="JSON settings (inline or @file); flags override it")
    p.add_argument("--alpha", type=float)
    p.add_argument("-m", type=int, help="artificial sample size")
    p.add_argument("-b", type=int, help="resampling replicates")
    p.add_argument("--seed", type=int)
    _add_kernel_flags(p)


def _test_config(args, method=None) -> TestConfig:
    cfg = _json_arg(args.config) if args.config else {}
    pick = lambda key, default: getattr(args, key) if getattr(args, key) is not None else cfg.get(key, default)
    return TestConfig(alpha=pick("alpha", 0.05), m=pick("m", 500), b=pick("b", 199),
                      method=method or cfg.get("method", "bootstrap"),
                      seed=SeedStream(int(pick("seed", 0))), kernel=_kernel(args, cfg))


def _result_dict(res) -> dict:
    out = {"statistic": res.statistic_observed, "critical_value": res.critical_value,
           "p_value": res.p_value, "reject": res.reject, "b": int(res.replicate_statistics.size),
           "kernel": res.kernel.label}
    if res.fitted is not None:
        out["fitted"] = spec_to_dict(res.fitted.spec)
        out["failed_replicates"] = res.failed_replicates
    return out


def _print_json(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_sample(args):
    spec = spec_from_dict(_json_arg(args.spec))
    write_points(sample(spec, args.n, SeedStream(args.seed)), args.out)


def cmd_stat(args):
    x, y = read_points(args.x), read_points(args.y)
    v = compute_statistic(x, y, _kernel(args, {}))
    _print_json({"statistic": v.t, "delta": v.delta, "n": v.n, "m": v.m, "kernel": v.kernel.label})


def cmd_test_simple(args):
    null = spec_from_dict(_json_arg(args.null))
    cfg = _test_config(args, args.method)
    _print_json(_result_dict(test_simple(read_points(args.data), null, cfg)))


def cmd_test_composite(args):
    cfg = _test_config(args)
    _print_json(_result_dict(test_composite(read_points(args.data), args.family, cfg)))


def _progress(done, total):
    sys.stderr.write(f"\r{done}/{total} replications")
    if done == total:
        sys.stderr.write("\n")


def cmd_power_study(args):
    if args.config:
        cfg = _json_arg(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise UsageError("power-study needs --config or --preset")
    for key in ("n", "m", "b", "alpha", "replications", "seed", "method"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    spec = ExperimentSpec.from_dict(cfg)
    workers = args.workers or default_workers()

    def flush(partial):
        for fmt, path in (("csv", args.csv), ("json", args.json)):
            if path:
                emit_report(partial, fmt, f"{path}.partial")

    table = run_power_study(spec, workers=workers, progress=None if args.quiet else _progress, on_abort=flush)
    if args.csv:
        emit_report(table, "csv", args.csv)
    if args.json:
        emit_report(table, "json", args.json)
    if not args.csv and not args.json:
        sys.stdout.write(render_csv(table))


def cmd_ingest(args):
    x, records = ingest_geomagia_csv(args.path, args.age)
    sys.stderr.write(f"{x.n} records\n")
    if args.out:
        write_points(x, args.out)


def cmd_real_data(args):
    gammas = [float(g) for g in args.gammas.split(",")] if args.gammas else list(VMF_GAMMAS)
    kernels = [StableCF(g, args.xi) for g in gammas]
    reports = [run_real_data_analysis(args.path, fam, kernels, b=args.b, m=args.m, seed=args.seed,
                                      age_filter=args.age, alpha=args.alpha)
               for fam in args.family]
    if args.csv:
        emit_report(reports, "csv", args.csv)
    if args.json:
        emit_report(reports, "json", args.json)
    if not args.csv and not args.json:
        sys.stdout.write(render_csv(reports))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spheregof", description="Characteristic-function goodness-of-fit tests on the sphere.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw points from a distribution")
    s.add_argument("--spec", required=True, help='distribution JSON, e.g. \'{"type": "vmf", ...}\' or @file')
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("stat", help="two-sample statistic between two point files")
    s.add_argument("x")
    s.add_argument("y")
    _add_kernel_flags(s)
    s.set_defaults(func=cmd_stat)

    s = sub.add_parser("test-simple", help="test the fit to a fully specified distribution")
    s.add_argument("data")
    s.add_argument("--null", required=True, help="null distribution JSON or @file")
    s.add_argument("--method", choices=["bootstrap", "permutation"])
    _add_test_flags(s)
    s.set_defaults(func=cmd_test_simple)

    s = sub.add_parser("test-composite", help="test the fit to a parametric family")
    s.add_argument("data")
    s.add_argument("--family", required=True, choices=["vmf", "acg", "kent"])
    _add_test_flags(s)
    s.set_defaults(func=cmd_test_composite)

    s = sub.add_parser("power-study", help="Monte Carlo rejection rates")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--config", help="experiment JSON or @file")
    g.add_argument("--preset", choices=PRESETS)
    for name, typ in (("n", int), ("m", int), ("b", int), ("alpha", float), ("replications", int),
                      ("seed", int)):
        s.add_argument(f"--{name}", type=typ)
    s.add_argument("--method", choices=["bootstrap", "permutation"])
    s.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    s.add_argument("--csv", help="write the table as CSV")
    s.add_argument("--json", help="write the table as JSON")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_power_study)

    s = sub.add_parser("ingest", help="validate a paleomagnetic CSV and convert it to points")
    s.add_argument("path")
    s.add_argument("--age", type=float, help="keep only records of this exact age")
    s.add_argument("--out", help="write Cartesian points as CSV")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("real-data", help="composite tests on paleomagnetic data")
    s.add_argument("path")
    s.add_argument("--family", nargs="+", choices=["vmf", "kent"], default=["vmf", "kent"])
    s.add_argument("--age", type=float)
    s.add_argument("--gammas", help="comma-separated kernel scales (default 0.1,0.5,0.75,1,2,3)")
    s.add_argument("--xi", type=float, default=2.0)
    s.add_argument("-b", type=int, default=1000)
    s.add_argument("-m", type=int, default=500)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv")
    s.add_argument("--json")
    s.set_defaults(func=cmd_real_data)
    return p


_DATA_ERRORS = (ParseError, EmptyAfterFilter, EmptyInput, NotUnitNorm, DimensionMismatch, OutOfRange,
                ZeroVector, UnsupportedDimension, OSError)
_NUMERIC_ERRORS = (EstimationError, FitFailed, ArithmeticError, FloatingPointError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (UsageError, InvalidConfig, InvalidSpec, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
