"""CSV and JSON report files.

Column names and order are part of the output contract:

table1.csv       algorithm, lookup_ns, variance_before, variance_after,
                 moved_ratio, cv_before, cv_after
grades.csv       algorithm, uniformity, rebalancing, speed, uniformity_cv,
                 rebalancing_ratio, speed_factor
nodewalk.csv     algorithm, step, label, action, node, live_shards, moved,
                 optimal, moved_ratio, sim_compute_s
*_distribution   algorithm, step, label, shard_0 .. shard_{n-1}
timing.csv       algorithm, mean_ns, rank

Timing is integer nanoseconds, ratios carry two decimals, an unbounded ratio
is written as ``inf``.  JSON bundles follow ``data/report.schema.json``.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .errors import IncompleteInputError
from .experiments import NodeWalkTrace, Table1Row, TimingResult
from .grading import GradeRow

TABLE1_COLUMNS = (
    "algorithm", "lookup_ns", "variance_before", "variance_after",
    "moved_ratio", "cv_before", "cv_after",
)
GRADE_COLUMNS = (
    "algorithm", "uniformity", "rebalancing", "speed",
    "uniformity_cv", "rebalancing_ratio", "speed_factor",
)
NODEWALK_COLUMNS = (
    "algorithm", "step", "label", "action", "node", "live_shards",
    "moved", "optimal", "moved_ratio", "sim_compute_s",
)
TIMING_COLUMNS = ("algorithm", "mean_ns", "rank")
TIMING_FIELDS = {"table1": ("lookup_ns",), "nodewalk": ("sim_compute_s",), "timing": ("mean_ns", "rank")}


def _ratio(x: float):
    return "inf" if math.isinf(x) else round(x, 2)


def _ns(x: float):
    return None if x is None or math.isnan(x) else int(round(x))


def table1_records(rows: Iterable[Table1Row]) -> list[dict]:
    return [
        {
            "algorithm": r.algorithm,
            "lookup_ns": _ns(r.lookup_ns),
            "variance_before": round(r.variance_before, 2),
            "variance_after": round(r.variance_after, 2),
            "moved_ratio": _ratio(r.moved_ratio),
            "cv_before": round(r.cv_before, 4),
            "cv_after": round(r.cv_after, 4),
        }
        for r in rows
    ]


def grade_records(rows: Iterable[GradeRow]) -> list[dict]:
    return [
        {
            "algorithm": g.algorithm,
            "uniformity": g.uniformity,
            "rebalancing": g.rebalancing,
            "speed": g.speed,
            "uniformity_cv": round(g.uniformity_cv, 4),
            "rebalancing_ratio": _ratio(g.rebalancing_ratio),
            "speed_factor": round(g.speed_factor, 2),
        }
        for g in rows
    ]


def trace_records(traces: Mapping[str, NodeWalkTrace]) -> list[dict]:
    out = []
    for algorithm, trace in traces.items():
        out.append({
            "algorithm": algorithm,
            "initial_counts": list(trace.initial_counts.values()),
            "steps": [
                {
                    "step": i,
                    "label": s.label,
                    "action": s.action,
                    "node": s.node,
                    "live_shards": s.live,
                    "moved": s.report.moved,
                    "optimal": s.report.optimal,
                    "moved_ratio": _ratio(s.report.ratio),
                    "sim_compute_s": round(s.report.elapsed, 6),
                    "counts": list(s.counts.values()),
                }
                for i, s in enumerate(trace.steps, start=1)
            ],
            "round_trip": trace.round_trip,
        })
    return out


def nodewalk_rows(records: Sequence[dict]) -> list[dict]:
    return [
        {"algorithm": t["algorithm"], **{k: s[k] for k in NODEWALK_COLUMNS[1:]}}
        for t in records
        for s in t["steps"]
    ]


def distribution_rows(records: Sequence[dict]) -> tuple[list[str], list[dict]]:
    """Per-shard counts at every step; step 0 is the initial distribution."""
    width = max((len(t["initial_counts"]) for t in records), default=0)
    columns = ["algorithm", "step", "label"] + [f"shard_{i}" for i in range(width)]
    rows = []
    for t in records:
        states = [(0, "initial", t["initial_counts"])] + [(s["step"], s["label"], s["counts"]) for s in t["steps"]]
        for step, label, counts in states:
            row = {"algorithm": t["algorithm"], "step": step, "label": label}
            row.update({f"shard_{i}": c for i, c in enumerate(counts)})
            rows.append(row)
    return columns, rows


def timing_record(result: TimingResult) -> dict:
    return {
        "mode": result.mode,
        "lookups": result.lookups,
        "shards": result.shards,
        "mean_ns": {a: round(v, 1) for a, v in result.mean_ns.items()},
        "ordering": result.ordering,
    }


def timing_rows(result: TimingResult) -> list[dict]:
    return [
        {"algorithm": a, "mean_ns": _ns(result.mean_ns[a]), "rank": i}
        for i, a in enumerate(result.ordering, start=1)
    ]


def bundle(
    command: str,
    config: Mapping | None,
    seed: int | None,
    *,
    table1: list[dict] = (),
    table2: list[dict] = (),
    nodewalk: list[dict] = (),
    timing: dict | None = None,
    thresholds: Mapping | None = None,
) -> dict:
    metadata = {
        "tool": "shardbench",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": dict(config or {}),
        "timing_note": "timings are wall-clock of in-process simulation on this host",
    }
    if thresholds is not None:
        metadata["thresholds"] = dict(thresholds)
    return {
        "metadata": metadata,
        "table1": list(table1),
        "table2": list(table2),
        "nodewalk": list(nodewalk),
        "timing": timing,
    }


_CSV_FORMATS = {
    "variance_before": "{:.2f}",
    "variance_after": "{:.2f}",
    "moved_ratio": "{:.2f}",
    "rebalancing_ratio": "{:.2f}",
    "speed_factor": "{:.2f}",
    "cv_before": "{:.4f}",
    "cv_after": "{:.4f}",
    "uniformity_cv": "{:.4f}",
    "sim_compute_s": "{:.6f}",
}


def format_cell(column: str, value) -> str:
    """Text of one CSV cell; fixed decimals for ratio, variance and cv columns."""
    if value is None:
        return ""
    fmt = _CSV_FORMATS.get(column)
    if fmt and isinstance(value, (int, float)) and not isinstance(value, bool):
        return fmt.format(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: format_cell(k, row.get(k)) for k in columns})
    return path


def write_json(path: Path, payload: Mapping) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def load_schema() -> dict:
    return json.loads(resources.files("shardbench.data").joinpath("report.schema.json").read_text("utf-8"))


def published_table1_path() -> Path:
    """Reference measurements in table1 layout, shipped with the package."""
    return Path(str(resources.files("shardbench.data").joinpath("published_table1.csv")))


def _float(value, column: str, algorithm: str) -> float:
    if value is None or value == "":
        raise IncompleteInputError(f"{algorithm}: missing {column}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise IncompleteInputError(f"{algorithm}: {column}={value!r} is not a number") from None


def rows_from_records(records: Sequence[Mapping]) -> list[Table1Row]:
    if not records:
        raise IncompleteInputError("no table1 rows")
    rows = []
    for rec in records:
        algorithm = rec.get("algorithm") or ""
        if not algorithm:
            raise IncompleteInputError("row without algorithm name")
        values = {c: _float(rec.get(c), c, algorithm) for c in TABLE1_COLUMNS[1:]}
        rows.append(Table1Row(algorithm=algorithm, **values))
    return rows


def read_table1(path: Path) -> list[Table1Row]:
    """table1 rows from a CSV file or from a JSON bundle."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise IncompleteInputError(f"{path} is empty")
    if path.suffix.lower() == ".json":
        try:
            records = json.loads(text).get("table1", [])
        except (json.JSONDecodeError, AttributeError) as exc:
            raise IncompleteInputError(f"{path}: not a report bundle ({exc})") from None
    else:
        reader = csv.DictReader(text.splitlines())
        missing = set(TABLE1_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise IncompleteInputError(f"{path}: missing columns {sorted(missing)}")
        records = list(reader)
    return rows_from_records(records)


def read_walk_ratios(path: Path) -> dict[str, list[float]]:
    """Moved ratios of the node-removal steps, per algorithm, from a nodewalk JSON bundle."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise IncompleteInputError(f"{path} is empty")
    try:
        traces = json.loads(text)["nodewalk"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise IncompleteInputError(f"{path}: not a nodewalk bundle ({exc})") from None
    out = {}
    for t in traces:
        out[t["algorithm"]] = [
            math.inf if s["moved_ratio"] == "inf" else float(s["moved_ratio"])
            for s in t["steps"] if s["action"] == "remove"
        ]
    return out
