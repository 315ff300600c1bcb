"""Experiment drivers.

* ``run_simulation_experiment``: distribute records over 32 shards, drop 8,
  rebalance, and average the metrics over several trials.
* ``run_timing_experiment``: mean per-lookup time of every algorithm.
* ``run_node_walk``: a 4-node x 8-shard cluster loses three nodes one at a
  time and gets them back; every step is a single atomic membership change.
"""

from __future__ import annotations

import gc
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .balancers import ALGORITHMS, Balancer, make_balancer, resolve_algorithms
from .errors import ConfigurationError
from .grading import GradeRow, Thresholds, grade
from .hashing import check_seed, hash_pair, hash_pair_array
from .rebalance import Assignment, RebalanceReport, RecordPopulation, distribute, rebalance

REMOVAL_MODES = ("random", "highest")
READD_ORDERS = ("lifo", "fifo")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple[str, ...] = tuple(ALGORITHMS)
    records: int = 10_000
    shards: int = 32
    drop: int = 8
    nodes: int = 4
    shards_per_node: int = 8
    walk_nodes: int = 3
    trials: int = 10
    seed: int = 0
    removal_mode: str = "random"
    readd_order: str = "lifo"
    timing_sample: int = 1000
    points_per_shard: int = 16
    table_size: int = 103
    anchor_capacity: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithms", tuple(resolve_algorithms(self.algorithms)))

    def validate(self, node_walk: bool = False) -> ExperimentConfig:
        check_seed(self.seed)
        if self.records < 1:
            raise ConfigurationError("records must be >= 1")
        if self.shards < 1:
            raise ConfigurationError("shards must be >= 1")
        if not 0 <= self.drop < self.shards:
            raise ConfigurationError("drop must be in [0, shards)")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.timing_sample < 0:
            raise ConfigurationError("timing_sample must be >= 0")
        if self.removal_mode not in REMOVAL_MODES:
            raise ConfigurationError(f"removal_mode must be one of {REMOVAL_MODES}")
        if self.readd_order not in READD_ORDERS:
            raise ConfigurationError(f"readd_order must be one of {READD_ORDERS}")
        if self.shards > self.anchor_capacity and "anchor" in self.algorithms:
            raise ConfigurationError("anchor capacity is smaller than the shard count")
        if self.shards > self.table_size and "maglev" in self.algorithms:
            raise ConfigurationError("maglev table is smaller than the shard count")
        if node_walk:
            if self.nodes < 1 or self.shards_per_node < 1:
                raise ConfigurationError("nodes and shards_per_node must be >= 1")
            if self.nodes * self.shards_per_node != self.shards:
                raise ConfigurationError("nodes * shards_per_node must equal shards")
            if not 1 <= self.walk_nodes < self.nodes:
                raise ConfigurationError(
                    f"cannot remove {self.walk_nodes} of {self.nodes} nodes and keep one"
                )
        return self

    def params(self, algorithm: str) -> dict:
        return {
            "consistent": {"points_per_shard": self.points_per_shard},
            "maglev": {"table_size": self.table_size},
            "anchor": {"capacity": self.anchor_capacity},
        }.get(algorithm, {})

    def build(self, algorithm: str, shards: Sequence[int], seed: int) -> Balancer:
        return make_balancer(algorithm, shards, seed=seed, **self.params(algorithm))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        return d


def trial_seed(seed: int, trial: int) -> int:
    return hash_pair(seed, trial, 0)


def select_removed(shards: Sequence[int], count: int, mode: str, seed: int) -> list[int]:
    """Shards to drop: a seeded random sample or the highest ids."""
    if mode == "highest":
        return sorted(shards)[len(shards) - count:]
    if mode == "random":
        ranked = sorted(shards, key=lambda s: (hash_pair(s, 0xD20F, seed), s))
        return sorted(ranked[:count])
    raise ConfigurationError(f"unknown removal mode {mode!r}")


def measure_lookup_ns(balancer: Balancer, keys: Sequence[int], warmup: int = 200) -> float:
    """Mean wall-clock nanoseconds of one scalar ``lookup``, warm-up excluded."""
    keys = [int(k) for k in keys]
    if not keys:
        return math.nan
    lookup = balancer.lookup
    for k in keys[:warmup]:
        lookup(k)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter_ns()
        for k in keys:
            lookup(k)
        elapsed = time.perf_counter_ns() - start
    finally:
        if gc_was_enabled:
            gc.enable()
    return elapsed / len(keys)


def measure_batch_ns(balancer: Balancer, keys: np.ndarray, chunk: int = 1 << 16) -> float:
    """Mean nanoseconds per key of ``lookup_many``, amortised over chunks."""
    keys = np.asarray(keys, dtype=np.uint64)
    if not len(keys):
        return math.nan
    balancer.lookup_many(keys[:chunk])
    start = time.perf_counter_ns()
    for lo in range(0, len(keys), chunk):
        balancer.lookup_many(keys[lo:lo + chunk])
    return (time.perf_counter_ns() - start) / len(keys)


@dataclass(frozen=True)
class Table1Row:
    algorithm: str
    lookup_ns: float
    variance_before: float
    variance_after: float
    moved_ratio: float
    cv_before: float
    cv_after: float


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    trial: int
    removed: tuple[int, ...]
    lookup_ns: float
    report: RebalanceReport


def run_trial(
    config: ExperimentConfig, algorithm: str, trial: int, population: RecordPopulation | None = None
) -> TrialResult:
    seed = trial_seed(config.seed, trial)
    if population is None:
        population = RecordPopulation.generate(config.records, seed)
    balancer = config.build(algorithm, range(config.shards), seed)
    assignment, _ = distribute(population, balancer)
    sample = population.keys[: config.timing_sample].tolist()
    lookup_ns = measure_lookup_ns(balancer, sample) if sample else math.nan
    removed = select_removed(balancer.shards, config.drop, config.removal_mode, seed)
    _, report = rebalance(assignment, balancer, remove=removed, label=f"drop {len(removed)}")
    return TrialResult(algorithm, trial, tuple(removed), lookup_ns, report)


def summarize(algorithm: str, trials: Sequence[TrialResult]) -> Table1Row:
    reports = [t.report for t in trials]
    timed = [t.lookup_ns for t in trials if not math.isnan(t.lookup_ns)]
    return Table1Row(
        algorithm=algorithm,
        lookup_ns=float(np.mean(timed)) if timed else math.nan,
        variance_before=float(np.mean([r.stats_before.variance for r in reports])),
        variance_after=float(np.mean([r.stats_after.variance for r in reports])),
        moved_ratio=float(np.mean([r.ratio for r in reports])),
        cv_before=float(np.mean([r.stats_before.cv for r in reports])),
        cv_after=float(np.mean([r.stats_after.cv for r in reports])),
    )


def run_simulation_experiment(
    config: ExperimentConfig, *, keep_trials: list | None = None
) -> list[Table1Row]:
    """One averaged row per algorithm.  Per-trial results are appended to ``keep_trials`` if given."""
    config.validate()
    results: dict[str, list[TrialResult]] = {a: [] for a in config.algorithms}
    for t in range(config.trials):
        population = RecordPopulation.generate(config.records, trial_seed(config.seed, t))
        for algorithm in config.algorithms:
            results[algorithm].append(run_trial(config, algorithm, t, population))
    if keep_trials is not None:
        for trials in results.values():
            keep_trials.extend(trials)
    return [summarize(a, trials) for a, trials in results.items()]


@dataclass(frozen=True)
class TimingResult:
    mean_ns: dict[str, float]
    lookups: int
    mode: str
    shards: int

    @property
    def ordering(self) -> list[str]:
        """Algorithms from fastest to slowest."""
        return sorted(self.mean_ns, key=self.mean_ns.__getitem__)


def run_timing_experiment(
    config: ExperimentConfig, lookups: int | None = None, mode: str = "scalar"
) -> TimingResult:
    """Mean lookup time per algorithm over ``lookups`` keys (default: ``config.records``).

    ``mode="scalar"`` times individual ``lookup`` calls; ``mode="batch"``
    times the vectorised ``lookup_many`` path and divides by the key count.
    Only the ordering is meaningful across machines.
    """
    config.validate()
    if mode not in ("scalar", "batch"):
        raise ConfigurationError(f"unknown timing mode {mode!r}")
    lookups = config.records if lookups is None else lookups
    if lookups < 1:
        raise ConfigurationError("lookups must be >= 1")
    keys = hash_pair_array(np.arange(lookups, dtype=np.uint64), 0x71AE, config.seed)
    means = {}
    for algorithm in config.algorithms:
        balancer = config.build(algorithm, range(config.shards), config.seed)
        if mode == "scalar":
            means[algorithm] = measure_lookup_ns(balancer, keys.tolist())
        else:
            means[algorithm] = measure_batch_ns(balancer, keys)
    return TimingResult(means, lookups, mode, config.shards)


@dataclass(frozen=True)
class NodeWalkStep:
    label: str
    action: str  # "remove" | "add"
    node: int
    shards: tuple[int, ...]
    live: int
    report: RebalanceReport
    counts: dict[int, int]  # over every initial shard id, 0 when not live


@dataclass
class NodeWalkTrace:
    algorithm: str
    initial_counts: dict[int, int]
    steps: list[NodeWalkStep] = field(default_factory=list)
    round_trip: bool = False  # final mapping identical to the initial one


def node_shards(node: int, shards_per_node: int) -> tuple[int, ...]:
    return tuple(range(node * shards_per_node, (node + 1) * shards_per_node))


def walk_schedule(config: ExperimentConfig) -> list[tuple[str, int]]:
    """Remove nodes 1..k one by one, then add them back."""
    removed = list(range(1, config.walk_nodes + 1))
    readd = list(reversed(removed)) if config.readd_order == "lifo" else list(removed)
    return [("remove", n) for n in removed] + [("add", n) for n in readd]


def run_node_walk(config: ExperimentConfig) -> dict[str, NodeWalkTrace]:
    config.validate(node_walk=True)
    population = RecordPopulation.generate(config.records, config.seed)
    all_shards = tuple(range(config.shards))
    traces = {}
    for algorithm in config.algorithms:
        balancer = config.build(algorithm, all_shards, config.seed)
        initial, stats = distribute(population, balancer)
        trace = NodeWalkTrace(algorithm, dict(stats.counts))
        assignment: Assignment = initial
        for action, node in walk_schedule(config):
            ids = node_shards(node, config.shards_per_node)
            label = f"{action} node {node}"
            if action == "remove":
                assignment, report = rebalance(assignment, balancer, remove=ids, label=label)
            else:
                assignment, report = rebalance(assignment, balancer, add=ids, label=label)
            trace.steps.append(NodeWalkStep(
                label=label,
                action=action,
                node=node,
                shards=ids,
                live=len(balancer.shards),
                report=report,
                counts=assignment.counts(all_shards),
            ))
        trace.round_trip = bool(np.array_equal(assignment.shards, initial.shards))
        traces[algorithm] = trace
    return traces


__all__ = [
    "ExperimentConfig",
    "GradeRow",
    "NodeWalkStep",
    "NodeWalkTrace",
    "Table1Row",
    "Thresholds",
    "TimingResult",
    "TrialResult",
    "grade",
    "measure_batch_ns",
    "measure_lookup_ns",
    "run_node_walk",
    "run_simulation_experiment",
    "run_timing_experiment",
    "run_trial",
    "select_removed",
    "summarize",
    "trial_seed",
    "walk_schedule",
]
