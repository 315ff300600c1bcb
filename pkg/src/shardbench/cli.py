"""Command-line front end.

    shardbench simulate --algorithms all --records 10000 --shards 32 --drop 8 \\
        --trials 10 --seed 42 --out table1.csv
    shardbench nodewalk --nodes 4 --shards-per-node 8 --out nodewalk.csv
    shardbench timing --lookups 1000000 --algorithms maglev,rendezvous
    shardbench grade --published

Every command writes a CSV and a JSON bundle next to it (same stem, ``.json``).
Without ``--out`` files go to ``$SHARDBENCH_OUT_DIR`` or the working directory.

Exit codes: 0 success, 1 experiment or input failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import reports
from .balancers import DISPLAY_NAMES
from .errors import ConfigurationError, ShardBenchError
from .experiments import (
    READD_ORDERS,
    REMOVAL_MODES,
    ExperimentConfig,
    run_node_walk,
    run_simulation_experiment,
    run_timing_experiment,
)
from .grading import Thresholds, grade

log = logging.getLogger("shardbench")

OUT_DIR_ENV = "SHARDBENCH_OUT_DIR"


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _output(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


def _add_common(p: argparse.ArgumentParser, *, algorithms: bool = True) -> None:
    if algorithms:
        p.add_argument("--algorithms", default="all",
                       help="'all' or a comma separated list (%(default)s)")
    p.add_argument("--seed", type=_non_negative, default=0)
    p.add_argument("--out", help="CSV output path; the JSON bundle uses the same stem")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the table")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points-per-shard", type=int, default=16)
    p.add_argument("--table-size", type=int, default=103, help="Maglev table size (prime)")
    p.add_argument("--anchor-capacity", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shardbench", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {reports.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="drop shards and measure uniformity, movement and lookup time")
    _add_common(sim)
    _add_params(sim)
    sim.add_argument("--records", type=int, default=10_000)
    sim.add_argument("--shards", type=int, default=32)
    sim.add_argument("--drop", type=int, default=8)
    sim.add_argument("--trials", type=int, default=10)
    sim.add_argument("--removal-mode", choices=REMOVAL_MODES, default="random")
    sim.add_argument("--timing-sample", type=_non_negative, default=1000,
                     help="scalar lookups timed per trial, 0 disables timing")

    walk = sub.add_parser("nodewalk", help="remove nodes one by one, then add them back")
    _add_common(walk)
    _add_params(walk)
    walk.add_argument("--records", type=int, default=10_000)
    walk.add_argument("--nodes", type=int, default=4)
    walk.add_argument("--shards-per-node", type=int, default=8)
    walk.add_argument("--walk-nodes", type=int, default=3, help="nodes removed and re-added")
    walk.add_argument("--readd-order", choices=READD_ORDERS, default="lifo")

    tim = sub.add_parser("timing", help="mean lookup time per algorithm")
    _add_common(tim)
    _add_params(tim)
    tim.add_argument("--shards", type=int, default=32)
    tim.add_argument("--lookups", type=int, default=10_000)
    tim.add_argument("--mode", choices=("scalar", "batch"), default="scalar")

    gr = sub.add_parser("grade", help="Low/Medium/High table from a table1 report")
    _add_common(gr, algorithms=False)
    src = gr.add_mutually_exclusive_group(required=True)
    src.add_argument("--table1", help="table1 CSV or JSON bundle")
    src.add_argument("--published", action="store_true",
                     help="grade the reference measurements shipped with the package")
    gr.add_argument("--nodewalk", help="nodewalk JSON bundle; its removal ratios also count")
    defaults = Thresholds()
    for name in Thresholds.__dataclass_fields__:
        gr.add_argument(f"--{name.replace('_', '-')}", type=float, default=getattr(defaults, name))
    return parser


def _config(args, **overrides) -> ExperimentConfig:
    fields = dict(
        algorithms=args.algorithms,
        seed=args.seed,
        points_per_shard=args.points_per_shard,
        table_size=args.table_size,
        anchor_capacity=args.anchor_capacity,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


def _print(columns: Sequence[str], rows: Sequence[dict]) -> None:
    cells = [[reports.format_cell(c, r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(columns)]
    print("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip())
    for row in cells:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())


def cmd_simulate(args) -> int:
    config = _config(
        args, records=args.records, shards=args.shards, drop=args.drop, trials=args.trials,
        removal_mode=args.removal_mode, timing_sample=args.timing_sample,
    ).validate()
    rows = reports.table1_records(run_simulation_experiment(config))
    out = _output(args, "table1.csv")
    reports.write_csv(out, reports.TABLE1_COLUMNS, rows)
    reports.write_json(out.with_suffix(".json"), reports.bundle("simulate", config.to_dict(), config.seed, table1=rows))
    if not args.quiet:
        _print(reports.TABLE1_COLUMNS, rows)
    log.info("wrote %s", out)
    return 0


def cmd_nodewalk(args) -> int:
    config = _config(
        args, records=args.records, nodes=args.nodes, shards_per_node=args.shards_per_node,
        shards=args.nodes * args.shards_per_node, walk_nodes=args.walk_nodes,
        readd_order=args.readd_order, drop=0,
    ).validate(node_walk=True)
    records = reports.trace_records(run_node_walk(config))
    out = _output(args, "nodewalk.csv")
    steps = reports.nodewalk_rows(records)
    reports.write_csv(out, reports.NODEWALK_COLUMNS, steps)
    columns, dist = reports.distribution_rows(records)
    reports.write_csv(out.with_name(out.stem + "_distribution.csv"), columns, dist)
    reports.write_json(out.with_suffix(".json"), reports.bundle("nodewalk", config.to_dict(), config.seed, nodewalk=records))
    if not args.quiet:
        _print(reports.NODEWALK_COLUMNS, steps)
    return 0


def cmd_timing(args) -> int:
    config = _config(args, shards=args.shards, drop=0).validate()
    result = run_timing_experiment(config, lookups=args.lookups, mode=args.mode)
    rows = reports.timing_rows(result)
    out = _output(args, "timing.csv")
    reports.write_csv(out, reports.TIMING_COLUMNS, rows)
    reports.write_json(out.with_suffix(".json"), reports.bundle(
        "timing", config.to_dict(), config.seed, timing=reports.timing_record(result)))
    if not args.quiet:
        _print(reports.TIMING_COLUMNS, rows)
        print("ordering:", " < ".join(DISPLAY_NAMES.get(a, a) for a in result.ordering))
    return 0


def cmd_grade(args) -> int:
    source = reports.published_table1_path() if args.published else Path(args.table1)
    rows = reports.read_table1(source)
    traces = reports.read_walk_ratios(Path(args.nodewalk)) if args.nodewalk else None
    thresholds = Thresholds(**{name: getattr(args, name) for name in Thresholds.__dataclass_fields__})
    records = reports.grade_records(grade(rows, traces, thresholds))
    out = _output(args, "grades.csv")
    reports.write_csv(out, reports.GRADE_COLUMNS, records)
    config = {"table1": str(source), "nodewalk": args.nodewalk}
    reports.write_json(out.with_suffix(".json"), reports.bundle(
        "grade", config, None, table1=reports.table1_records(rows), table2=records,
        thresholds=thresholds.to_dict()))
    if not args.quiet:
        _print(reports.GRADE_COLUMNS[:4], records)
    return 0


COMMANDS = {"simulate": cmd_simulate, "nodewalk": cmd_nodewalk, "timing": cmd_timing, "grade": cmd_grade}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        parser.print_usage(sys.stderr)
        print(f"shardbench {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ShardBenchError, OSError) as exc:
        print(f"shardbench {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
