"""Command line interface.

Verbs: coverage, sweep, opt-height, backhaul, scenario, validate.
Exit codes: 0 success, 1 one or more sweep points failed, 2 usage or
config error.  Progress and diagnostics go to stderr; data to --out.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__
from .analytic import coverage_probability
from .montecarlo import (
    ASSOCIATION_MODES,
    backhaul_estimate,
    coverage_estimate,
    scenario_estimate,
)
from .params import (
    CONFIG_KEYS,
    ConfigError,
    config_digest,
    load_config,
    serialize_config,
)
from .sweep import ResultRecord, SweepSpec, run_sweep, write_csv, write_jsonl

COVERAGE_METRICS = ("p_coverage", "p_association", "p_los_serving")
SCENARIO_METRICS = ("p_joint", "p_association", "mean_height_m",
                    "p_backhaul_outage")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="config file path")
    parser.add_argument("--seed", type=int, default=1,
                        help="master seed for Monte Carlo trials")
    parser.add_argument("--trials", type=int, default=10000,
                        help="Monte Carlo trials per point")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for Monte Carlo trials")
    parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    parser.add_argument("--out", default="-",
                        help="output file ('-' for stdout)")
    parser.add_argument("--axis", action="append", default=[],
                        metavar="KEY=V1,V2,...",
                        help="sweep axis over a config key (repeatable)")
    parser.add_argument("--plots", metavar="DIR",
                        help="also render one PNG per metric into DIR")
    parser.add_argument("--timings", action="store_true",
                        help="include per-point wall time in the output")
    parser.add_argument("--resume", action="store_true",
                        help="continue an interrupted sweep from its manifest")
    parser.add_argument("--association", choices=ASSOCIATION_MODES,
                        default="averaged",
                        help="Monte Carlo association rule")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavcov",
        description="UAV network coverage: analytical and Monte Carlo engines")
    parser.add_argument("--version", action="version",
                        version=f"uavcov {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("coverage", help="end-user coverage at one parameter point")
    _add_common(p)
    p.add_argument("--engine", choices=("analytic", "mc", "both"),
                   default="analytic")

    p = sub.add_parser("sweep", help="coverage over a parameter grid")
    _add_common(p)
    p.add_argument("--engine", choices=("analytic", "mc", "both"),
                   default="analytic")

    p = sub.add_parser("opt-height", help="coverage-maximizing UAV height")
    _add_common(p)
    p.add_argument("--engine", choices=("analytic", "mc", "both"),
                   default="analytic")
    p.add_argument("--grid", default="20:300:5", metavar="MIN:MAX:STEP",
                   help="height grid in meters")

    p = sub.add_parser("backhaul", help="backhaul success probability (Monte Carlo)")
    _add_common(p)
    p.add_argument("--engine", choices=("mc",), default="mc")

    p = sub.add_parser("scenario",
                       help="joint coverage with per-UAV height optimization "
                            "(Monte Carlo)")
    _add_common(p)
    p.add_argument("--engine", choices=("mc",), default="mc")
    p.add_argument("--height-cap", type=float, default=300.0,
                   help="maximum UAV height in meters")
    p.add_argument("--height-step", type=float, default=5.0,
                   help="height increment in meters")

    p = sub.add_parser("validate", help="check a config file and print it "
                                        "in canonical form")
    p.add_argument("--config", required=True)
    return parser


def _parse_axes(specs: list[str]) -> list[tuple[str, list[float]]]:
    axes = []
    seen = set()
    for spec in specs:
        if "=" not in spec:
            raise ValueError(f"--axis {spec!r}: expected KEY=V1,V2,...")
        key, _, values = spec.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"--axis {spec!r}: unknown config key {key!r}")
        if key in seen:
            raise ValueError(f"--axis {spec!r}: duplicate axis {key!r}")
        seen.add(key)
        try:
            grid = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ValueError(f"--axis {spec!r}: values must be numbers") from None
        if not grid:
            raise ValueError(f"--axis {spec!r}: no values")
        axes.append((key, grid))
    return axes


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"--grid {spec!r}: expected MIN:MAX:STEP")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"--grid {spec!r}: need MIN <= MAX and STEP > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def _engines(arg: str) -> tuple[str, ...]:
    return ("analytic", "mc") if arg == "both" else (arg,)


def _coverage_evaluate(engines, trials, seed, jobs, mode):
    def evaluate(params, point_key):
        rows = []
        for engine in engines:
            if engine == "analytic":
                result = coverage_probability(params)
                values = {"p_coverage": result.p_coverage,
                          "p_association": result.p_association,
                          "p_los_serving": result.p_los_serving}
                rows += [(engine, m, values[m], None, None)
                         for m in COVERAGE_METRICS]
            else:
                est = coverage_estimate(params, trials, seed, point_key,
                                        mode, jobs)
                rows += [(engine, m, est[m].value, est[m].se, est[m].n)
                         for m in COVERAGE_METRICS]
        return rows
    return evaluate


def _backhaul_evaluate(trials, seed, jobs):
    def evaluate(params, point_key):
        est = backhaul_estimate(params, params.uav.height, trials, seed,
                                point_key, jobs)
        return [("mc", "p_backhaul", est.value, est.se, est.n)]
    return evaluate


def _scenario_evaluate(trials, seed, jobs, cap, step, mode):
    def evaluate(params, point_key):
        est = scenario_estimate(params, params.uav.height, trials, seed,
                                point_key, cap, step, mode, jobs)
        return [("mc", m, est[m].value, est[m].se, est[m].n)
                for m in SCENARIO_METRICS]
    return evaluate


def _progress(total):
    def report(point_key, overrides):
        where = f" {overrides}" if overrides else ""
        print(f"[{point_key + 1}/{total}]{where}", file=sys.stderr)
    return report


def _write_output(args, spec, records):
    writer = write_csv if args.format == "csv" else write_jsonl
    if args.out == "-":
        writer(sys.stdout, spec, records, args.timings)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            writer(fh, spec, records, args.timings)


def _run_verb(args) -> int:
    base = load_config(args.config, os.environ)
    axes = _parse_axes(args.axis)
    if args.verb == "sweep" and not axes:
        raise ValueError("sweep requires at least one --axis")

    engines = _engines(args.engine)
    if args.verb in ("coverage", "sweep"):
        evaluate = _coverage_evaluate(engines, args.trials, args.seed,
                                      args.jobs, args.association)
        spec = SweepSpec(base, axes, args.verb, engines, args.trials, args.seed)
    elif args.verb == "opt-height":
        if any(key == "gamma_m" for key, _ in axes):
            raise ValueError("opt-height owns the gamma_m axis; use --grid")
        grid = _parse_grid(args.grid)
        axes = [("gamma_m", grid)] + axes
        evaluate = _coverage_evaluate(engines, args.trials, args.seed,
                                      args.jobs, args.association)
        spec = SweepSpec(base, axes, args.verb, engines, args.trials, args.seed)
    elif args.verb == "backhaul":
        evaluate = _backhaul_evaluate(args.trials, args.seed, args.jobs)
        spec = SweepSpec(base, axes, args.verb, engines, args.trials, args.seed)
    else:  # scenario
        evaluate = _scenario_evaluate(args.trials, args.seed, args.jobs,
                                      args.height_cap, args.height_step,
                                      args.association)
        spec = SweepSpec(base, axes, args.verb, engines, args.trials, args.seed)

    total = 1
    for _, values in axes:
        total *= len(values)
    manifest_path = None
    if args.out != "-":
        manifest_path = args.out + ".manifest.jsonl"
    elif args.resume:
        raise ValueError("--resume requires --out")
    outcome = run_sweep(spec, evaluate, manifest_path, args.resume,
                        args.timings, _progress(total))
    if outcome.resumed:
        print(f"resumed {outcome.resumed} completed points", file=sys.stderr)

    records = outcome.records
    if args.verb == "opt-height":
        records = records + _optimum_records(spec, records, total)
    _write_output(args, spec, records)
    if args.plots:
        from .report import render_figures
        for path in render_figures(spec, records, args.plots):
            print(f"wrote {path}", file=sys.stderr)
    return 1 if outcome.failures else 0


def _optimum_records(spec, records, total) -> list[ResultRecord]:
    """Per-engine best height over the grid; lower height wins ties."""
    summary = []
    for engine in spec.engines:
        rows = [r for r in records
                if r.engine == engine and r.metric == "p_coverage"]
        best = None
        for r in sorted(rows, key=lambda r: r.overrides["gamma_m"]):
            if best is None or r.value > best.value:
                best = r
        if best is None:
            continue
        summary.append(ResultRecord(total, dict(best.overrides), engine,
                                    "gamma_opt_m", best.overrides["gamma_m"],
                                    None, None))
        summary.append(ResultRecord(total, dict(best.overrides), engine,
                                    "p_coverage_opt", best.value, best.se,
                                    best.trials))
    return summary


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "validate":
        try:
            params = load_config(args.config, os.environ)
        except FileNotFoundError:
            print(f"config file not found: {args.config}", file=sys.stderr)
            return 2
        except ConfigError as exc:
            for key, value, message in exc.violations:
                print(f"{key}: {message} (got {value!r})", file=sys.stderr)
            return 2
        sys.stdout.write(serialize_config(params))
        print(f"# sha256 = {config_digest(params)}")
        return 0
    try:
        return _run_verb(args)
    except FileNotFoundError as exc:
        print(f"config file not found: {exc.filename or args.config}",
              file=sys.stderr)
        return 2
    except ConfigError as exc:
        for key, value, message in exc.violations:
            print(f"{key}: {message} (got {value!r})", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
