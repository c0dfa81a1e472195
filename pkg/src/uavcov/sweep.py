"""Parameter sweeps and delimited output.

A sweep is the Cartesian product of axis value lists in the order the axes
were given.  Each point gets a stable integer key (its enumeration index);
the key seeds the Monte Carlo trial generators, so results do not depend
on which points ran, in what order, or how work was chunked.

Output is CSV (comment-prefixed metadata header) or JSONL (metadata on the
first line).  A sidecar ``<out>.manifest.jsonl`` records completed points
so an interrupted sweep can resume without recomputing them.
"""
from __future__ import annotations

import itertools
import json
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from .params import SystemParams, config_digest, with_overrides

METADATA_KEYS = ("version", "seed", "config_sha256", "verb", "engines",
                 "trials", "axes")


@dataclass(frozen=True)
class ResultRecord:
    point_key: int
    overrides: dict[str, float]  # display units, axis order
    engine: str
    metric: str
    value: float
    se: float | None = None
    trials: int | None = None
    wall_s: float | None = None


@dataclass
class SweepSpec:
    base: SystemParams
    axes: list[tuple[str, list[float]]]  # (config key, display-unit values)
    verb: str
    engines: tuple[str, ...]
    trials: int
    seed: int

    def metadata(self) -> dict:
        return {
            "version": __version__,
            "seed": self.seed,
            "config_sha256": config_digest(self.base),
            "verb": self.verb,
            "engines": list(self.engines),
            "trials": self.trials,
            "axes": [[key, values] for key, values in self.axes],
        }

    def points(self):
        """Yield (point_key, overrides dict) over the Cartesian product."""
        keys = [key for key, _ in self.axes]
        grids = [values for _, values in self.axes]
        for index, combo in enumerate(itertools.product(*grids)):
            yield index, dict(zip(keys, combo))


@dataclass
class SweepOutcome:
    records: list[ResultRecord] = field(default_factory=list)
    failures: list[tuple[int, dict, str]] = field(default_factory=list)
    resumed: int = 0


def run_sweep(spec: SweepSpec, evaluate, manifest_path=None, resume=False,
              timings=False, progress=None) -> SweepOutcome:
    """Evaluate every point, isolating per-point failures.

    ``evaluate(params, point_key)`` returns a list of (engine, metric,
    value, se, trials) tuples for one point.  Failed points are reported
    and skipped; the sweep continues.
    """
    outcome = SweepOutcome()
    done: dict[int, list[ResultRecord]] = {}
    if resume and manifest_path is not None:
        done = _read_manifest(manifest_path, spec.metadata())
        outcome.resumed = len(done)
    manifest = None
    if manifest_path is not None:
        mode = "a" if done else "w"
        manifest = open(manifest_path, mode, encoding="utf-8")
        if mode == "w":
            manifest.write(_json_line({"meta": spec.metadata()}))
            manifest.flush()
    try:
        for point_key, overrides in spec.points():
            if point_key in done:
                outcome.records.extend(done[point_key])
                continue
            if progress is not None:
                progress(point_key, overrides)
            start = time.perf_counter()
            try:
                params = with_overrides(spec.base, overrides)
                rows = evaluate(params, point_key)
            except Exception as exc:  # noqa: BLE001 - point isolation
                outcome.failures.append((point_key, overrides, str(exc)))
                print(f"point {point_key} {overrides} failed: {exc}",
                      file=sys.stderr)
                continue
            wall = time.perf_counter() - start
            records = [
                ResultRecord(point_key, overrides, engine, metric, value, se,
                             trials, wall if timings else None)
                for engine, metric, value, se, trials in rows
            ]
            outcome.records.extend(records)
            if manifest is not None:
                manifest.write(_json_line(_manifest_entry(point_key, records)))
                manifest.flush()
    finally:
        if manifest is not None:
            manifest.close()
    outcome.records.sort(key=lambda r: r.point_key)
    return outcome


def _json_line(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _manifest_entry(point_key: int, records: list[ResultRecord]) -> dict:
    return {
        "point": point_key,
        "records": [
            {"overrides": r.overrides, "engine": r.engine, "metric": r.metric,
             "value": r.value, "se": r.se, "trials": r.trials}
            for r in records
        ],
    }


def _read_manifest(path, expected_meta) -> dict[int, list[ResultRecord]]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        return {}
    if not lines:
        return {}
    head = json.loads(lines[0])
    meta = head.get("meta", {})
    if {k: meta.get(k) for k in METADATA_KEYS} != \
            {k: expected_meta.get(k) for k in METADATA_KEYS}:
        raise ValueError(
            "manifest does not match this sweep (seed, config, axes or "
            "engine changed); remove it or drop --resume")
    done: dict[int, list[ResultRecord]] = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        entry = json.loads(line)
        done[entry["point"]] = [
            ResultRecord(entry["point"], r["overrides"], r["engine"],
                         r["metric"], r["value"], r["se"], r["trials"])
            for r in entry["records"]
        ]
    return done


def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(fh, spec: SweepSpec, records: list[ResultRecord],
              timings=False) -> None:
    meta = spec.metadata()
    for key in METADATA_KEYS:
        fh.write(f"# {key} = {json.dumps(meta[key], sort_keys=True)}\n")
    axis_keys = [key for key, _ in spec.axes]
    header = axis_keys + ["engine", "metric", "value", "se", "trials"]
    if timings:
        header.append("wall_s")
    fh.write(",".join(header) + "\n")
    for r in records:
        row = [_format_cell(r.overrides.get(k)) for k in axis_keys]
        row += [r.engine, r.metric, _format_cell(r.value), _format_cell(r.se),
                _format_cell(r.trials)]
        if timings:
            row.append(_format_cell(r.wall_s))
        fh.write(",".join(row) + "\n")


def write_jsonl(fh, spec: SweepSpec, records: list[ResultRecord],
                timings=False) -> None:
    fh.write(_json_line({"meta": spec.metadata()}))
    for r in records:
        obj = {"point": r.point_key, "overrides": r.overrides,
               "engine": r.engine, "metric": r.metric, "value": r.value,
               "se": r.se, "trials": r.trials}
        if timings:
            obj["wall_s"] = r.wall_s
        fh.write(_json_line(obj))
