"""Command-line entry point: ``blockbalance {synthesize,calibrate,replay,partition,report}``.

Exit status 0 on success, 1 for usage or configuration errors, 2 for bad
input data.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .curves import CurveKind
from .distribution import diffusive_balance, edge_cut, refine_partition, sfc_partition
from .estimator import BUILTIN_COEFFICIENTS, PARTS, fit_coefficients, relative_errors, summary_stats
from .grid import build_grid
from .metrics import load_imbalance, process_loads
from .replay import LOAD_SOURCES, STRATEGIES, ReplaySummary, RunConfig, run_replay
from .scenario import (
    PRESETS,
    InfeasibleConfiguration,
    calibration_configs,
    record_trace,
    synthesize_trace,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# every key a replay config may set, with its default
CONFIG_DEFAULTS = {
    "scenario.preset": "settling-box",
    "scenario.scale": "0.5",
    "scenario.seed": "0",
    "run.strategy": "hilbert",
    "run.n_procs": "8",
    "run.interval": "100",
    "run.steps": "",
    "run.tolerance": "1.05",
    "run.load_source": "predicted",
    "run.timing_noise": "0.05",
    "coefficients.source": "builtin",
    "coefficients.file": "",
    "output.report": "report.csv",
    "output.summary": "",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path) -> dict[str, str]:
    """Read an INI file into dotted keys; unknown sections or keys are rejected."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    values = dict(CONFIG_DEFAULTS)
    for section in parser.sections():
        for key, value in parser.items(section):
            dotted = f"{section}.{key}"
            if dotted not in CONFIG_DEFAULTS:
                raise UsageError(f"unknown config key {dotted!r}")
            values[dotted] = value.strip()
    return values


def _parse(values: dict[str, str], key: str, kind):
    raw = values[key]
    try:
        return kind(raw)
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None


def run_config_from(values: dict[str, str], base_dir: Path) -> RunConfig:
    preset = values["scenario.preset"]
    if preset not in PRESETS:
        raise UsageError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    source = values["coefficients.source"]
    if source == "builtin":
        coeffs = BUILTIN_COEFFICIENTS
    elif source == "fitted":
        if not values["coefficients.file"]:
            raise UsageError("coefficients.source = fitted needs coefficients.file")
        coeffs = io.read_coefficients_json(base_dir / values["coefficients.file"])
    else:
        raise UsageError(f"coefficients.source must be builtin or fitted, got {source!r}")
    if values["run.load_source"] not in LOAD_SOURCES:
        raise UsageError(f"run.load_source must be one of {', '.join(LOAD_SOURCES)}")
    steps = values["run.steps"]
    try:
        return RunConfig(
            preset=preset,
            scale=_parse(values, "scenario.scale", float),
            seed=_parse(values, "scenario.seed", int),
            strategy=values["run.strategy"],
            n_procs=_parse(values, "run.n_procs", int),
            interval=_parse(values, "run.interval", int),
            steps=_parse(values, "run.steps", int) if steps else None,
            coefficients=coeffs,
            tolerance=_parse(values, "run.tolerance", float),
            load_source=values["run.load_source"],
            timing_noise=_parse(values, "run.timing_noise", float),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_synthesize(args) -> int:
    configs = calibration_configs(args.scale, seed=args.seed)
    samples = []
    for k, config in enumerate(configs):
        trace = record_trace(config, args.snapshots)
        samples += synthesize_trace(trace, BUILTIN_COEFFICIENTS, args.noise, seed=args.seed * 1000 + k)
    io.write_timing_csv(args.output, samples)
    print(f"wrote {len(samples)} samples to {args.output}")
    return EXIT_OK


def calibration_report(samples) -> dict:
    coeffs = fit_coefficients(samples)
    errors = relative_errors(samples, coeffs)
    stats = {}
    for part in (*PARTS, "tot"):
        med, mad = summary_stats(errors[part])
        stats[part] = {"median": med, "mad": mad}
    within = float(np.mean(np.abs(errors.total) < 0.10))
    return {"coefficients": coeffs, "errors": stats, "fraction_within_10pct": within, "n_samples": len(samples)}


def cmd_calibrate(args) -> int:
    samples = io.read_timing_csv(args.samples)
    result = calibration_report(samples)
    io.write_coefficients_json(
        args.output,
        result["coefficients"],
        errors=result["errors"],
        fraction_within_10pct=result["fraction_within_10pct"],
        n_samples=result["n_samples"],
    )
    for part, s in result["errors"].items():
        print(f"{part:>6}: median {s['median']:+.4f}  MAD {s['mad']:.4f}")
    print(f"|E_tot| < 0.10 for {100 * result['fraction_within_10pct']:.1f}% of {result['n_samples']} samples")
    return EXIT_OK


def cmd_replay(args) -> int:
    config_path = Path(args.config)
    values = load_config(config_path)
    for flag, key in (("seed", "scenario.seed"), ("steps", "run.steps"),
                      ("strategy", "run.strategy"), ("interval", "run.interval")):
        if getattr(args, flag) is not None:
            values[key] = str(getattr(args, flag))
    run = run_config_from(values, config_path.parent)
    try:
        reports = run_replay(run)
    except InfeasibleConfiguration as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    grid = run.scenario().grid
    report_path = config_path.parent / values["output.report"]
    io.write_report_csv(report_path, reports, grid.dims, grid.block_size)
    summary = ReplaySummary.of(reports)
    print(f"{run.strategy}: mean LI {summary.mean_LI:.4f}, makespan {summary.makespan:.3f} ms, "
          f"mean edge cut {summary.mean_edge_cut:.1f} over {len(reports)} intervals")
    if values["output.summary"]:
        Path(config_path.parent / values["output.summary"]).write_text(
            json.dumps(summary.__dict__, indent=2, sort_keys=True) + "\n"
        )
    return EXIT_OK


def _dims(text: str) -> tuple[int, int, int]:
    try:
        dims = tuple(int(d) for d in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 4x4x5, got {text!r}") from None
    if len(dims) != 3:
        raise argparse.ArgumentTypeError(f"dims must have three entries, got {text!r}")
    return dims


def cmd_partition(args) -> int:
    try:
        grid = build_grid(args.dims, args.block_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    weights = io.read_weights_csv(args.weights, grid)
    if not 1 <= args.procs <= grid.n_blocks:
        raise UsageError(f"{args.procs} processes for {grid.n_blocks} blocks")
    kind = CurveKind.MORTON if args.strategy == "morton" else CurveKind.HILBERT
    assignment = sfc_partition(grid, weights, args.procs, kind)
    if args.strategy == "diffusive":
        assignment = diffusive_balance(grid, weights, assignment)[0]
    elif args.strategy == "refine":
        assignment = refine_partition(grid, weights, assignment)
    io.write_assignment_csv(args.output, grid, assignment)
    loads = process_loads(grid, assignment, weights)
    print("loads " + " ".join(f"{x:g}" for x in loads))
    print(f"LI {load_imbalance(loads):.6g}")
    print(f"edge cut {edge_cut(grid, assignment)}")
    return EXIT_OK


def cmd_report(args) -> int:
    loaded = [(path, *io.read_report_csv(path)) for path in args.reports]
    grids = {(meta.get("grid"), meta.get("block_size")) for _, meta, _ in loaded}
    if len(grids) > 1:
        print("error: incomparable reports (different grids)", file=sys.stderr)
        return EXIT_DATA
    summaries = [(path, ReplaySummary.of(reports)) for path, _, reports in loaded]
    reference = summaries[0][1].makespan
    print(f"{'report':<28} {'strategy':<10} {'mean LI':>9} {'median LI':>10} {'makespan':>9} {'edge cut':>11}")
    for path, s in summaries:
        rel = 100 * s.makespan / reference if reference > 0 else math.nan
        print(f"{Path(path).name:<28} {s.strategy:<10} {s.mean_LI:>9.4f} {s.median_LI:>10.4f} "
              f"{rel:>8.1f}% {s.mean_edge_cut:>11.1f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockbalance", description="Block workload estimation and load distribution.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="write timing samples from settling-box traces")
    p.add_argument("output")
    p.add_argument("--scale", type=float, default=0.5)
    p.add_argument("--snapshots", type=int, default=70)
    p.add_argument("--noise", type=float, default=0.05, help="relative Gaussian noise per part")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("calibrate", help="fit coefficients from a timing CSV")
    p.add_argument("samples")
    p.add_argument("output")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("replay", help="replay a scenario under one strategy")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--interval", type=int)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("partition", help="partition externally supplied block weights")
    p.add_argument("weights")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--block-size", type=int, default=32)
    p.add_argument("--procs", type=int, required=True)
    p.add_argument("--strategy", choices=("morton", "hilbert", "diffusive", "refine"), default="hilbert")
    p.add_argument("--output", default="assignment.csv")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("report", help="compare replay reports")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except io.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # fit problems (too few samples, zero runtimes) are data errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
