"""Simulated record population, migration planning and rebalance metrics."""

from __future__ import annotations

import math
import time
import uuid
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .balancers import Balancer
from .errors import InconsistentPlanError, PlacementError
from .hashing import hash_pair_array


def _uuid4_word(words: np.ndarray, high: bool) -> np.ndarray:
    """Set the version-4 bits (high word) or RFC 4122 variant bits (low word)."""
    if high:
        return (words & np.uint64(~0xF000 & 0xFFFFFFFFFFFFFFFF)) | np.uint64(0x4000)
    return (words & np.uint64(0x3FFFFFFFFFFFFFFF)) | np.uint64(0x8000000000000000)


class Record(NamedTuple):
    etalon_id: uuid.UUID
    external_key: bytes
    key: int


@dataclass(frozen=True)
class RecordPopulation:
    """Records as (etalon id, external key) pairs, one external key per etalon.

    Both identifiers are derived from the workload seed through the frozen
    hash, and the placement key is ``hash64(external_key, seed)``.
    """

    etalon_ids: tuple[uuid.UUID, ...]
    external_keys: tuple[bytes, ...]
    keys: np.ndarray
    seed: int = 0

    @classmethod
    def generate(cls, count: int, seed: int = 0) -> RecordPopulation:
        if count < 0:
            raise ValueError("record count must be non-negative")
        index = np.arange(count, dtype=np.uint64)
        words = [_uuid4_word(hash_pair_array(index, j, seed), high=j % 2 == 0) for j in range(4)]
        etalons = tuple(uuid.UUID(int=(hi << 64) | lo) for hi, lo in zip(words[0].tolist(), words[1].tolist()))
        externals = tuple(
            hi.to_bytes(8, "big") + lo.to_bytes(8, "big") for hi, lo in zip(words[2].tolist(), words[3].tolist())
        )
        # hash64 of the 16 external-key bytes, computed word-wise
        keys = hash_pair_array(words[2], words[3], seed)
        keys.setflags(write=False)
        return cls(etalons, externals, keys, seed)

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[Record]:
        for e, x, k in zip(self.etalon_ids, self.external_keys, self.keys):
            yield Record(e, x, int(k))


@dataclass(frozen=True)
class Assignment:
    """Owner shard of every key, stored as aligned arrays."""

    keys: np.ndarray
    shards: np.ndarray

    def __post_init__(self) -> None:
        if self.keys.shape != self.shards.shape:
            raise ValueError("keys and shards must be aligned")

    def __len__(self) -> int:
        return len(self.keys)

    def owner(self, key: int) -> int:
        hits = np.flatnonzero(self.keys == np.uint64(key))
        if not hits.size:
            raise KeyError(key)
        return int(self.shards[hits[0]])

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.keys.tolist(), self.shards.tolist()))

    def counts(self, shards: Iterable[int]) -> dict[int, int]:
        shards = list(shards)
        ids, n = np.unique(self.shards, return_counts=True)
        found = dict(zip(ids.tolist(), n.tolist()))
        return {s: found.get(s, 0) for s in shards}


@dataclass(frozen=True)
class DistributionStats:
    counts: dict[int, int]
    mean: float
    variance: float  # population variance of the per-shard counts
    min: int
    max: int

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> DistributionStats:
        if not counts:
            raise PlacementError("no live shards to compute statistics over")
        values = np.fromiter(counts.values(), dtype=np.float64)
        return cls(
            counts=dict(counts),
            mean=float(values.mean()),
            variance=float(values.var()),
            min=int(values.min()),
            max=int(values.max()),
        )

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def cv(self) -> float:
        """Coefficient of variation, std / mean."""
        return self.std / self.mean if self.mean else 0.0

    @property
    def max_over_mean(self) -> float:
        return self.max / self.mean if self.mean else 0.0


@dataclass(frozen=True)
class MigrationPlan:
    """Keys whose owner changes; ``index`` points into the assignment arrays."""

    index: np.ndarray
    keys: np.ndarray
    sources: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        return zip(self.keys.tolist(), self.sources.tolist(), self.targets.tolist())

    @property
    def moves(self) -> list[tuple[int, int, int]]:
        return list(self)


@dataclass(frozen=True)
class RebalanceReport:
    label: str
    moved: int
    optimal: int
    stats_before: DistributionStats
    stats_after: DistributionStats
    elapsed: float  # seconds of simulated compute, not real data transfer

    @property
    def ratio(self) -> float:
        return moved_ratio(self.moved, self.optimal)


def distribute(population: RecordPopulation | np.ndarray, balancer: Balancer) -> tuple[Assignment, DistributionStats]:
    keys = population.keys if isinstance(population, RecordPopulation) else np.asarray(population, dtype=np.uint64)
    owners = balancer.lookup_many(keys)
    assignment = Assignment(keys, owners)
    return assignment, DistributionStats.from_counts(assignment.counts(balancer.shards))


def plan_migration(old: Assignment, balancer: Balancer) -> MigrationPlan:
    new = balancer.lookup_many(old.keys)
    index = np.flatnonzero(new != old.shards)
    return MigrationPlan(index, old.keys[index], old.shards[index], new[index])


def optimal_moves(old: Assignment, removed: Iterable[int], added: Iterable[int], live_after: int | None = None) -> int:
    """Fewest moves any algorithm could make for this membership change.

    Records on removed shards must move; new shards additionally need their
    uniform share ``ceil(N * |added| / live_after)`` of the population.
    """
    removed, added = set(removed), set(added)
    if removed & added:
        raise ValueError("a shard cannot be both added and removed in one change")
    evicted = int(np.isin(old.shards, list(removed)).sum()) if removed else 0
    if not added:
        return evicted
    if live_after is None:
        live_after = len(set(old.shards.tolist()) - removed | added)
    return evicted + math.ceil(len(old) * len(added) / live_after)


def moved_ratio(moved: int, optimal: int) -> float:
    if optimal == 0:
        return 1.0 if moved == 0 else math.inf
    return moved / optimal


def apply_plan(assignment: Assignment, plan: MigrationPlan) -> Assignment:
    if len(plan) and (
        plan.index.max() >= len(assignment)
        or not np.array_equal(assignment.keys[plan.index], plan.keys)
        or not np.array_equal(assignment.shards[plan.index], plan.sources)
    ):
        raise InconsistentPlanError("plan does not match the assignment it is applied to")
    shards = assignment.shards.copy()
    shards[plan.index] = plan.targets
    return Assignment(assignment.keys, shards)


def rebalance(
    assignment: Assignment,
    balancer: Balancer,
    *,
    remove: Iterable[int] = (),
    add: Iterable[int] = (),
    label: str = "",
) -> tuple[Assignment, RebalanceReport]:
    """Apply one membership change to ``balancer`` and migrate ``assignment``.

    Removals are applied before additions.  The balancer is mutated in place.
    """
    remove, add = tuple(remove), tuple(add)
    if set(remove) & set(add):
        raise ValueError("a shard cannot be both added and removed in one change")
    stats_before = DistributionStats.from_counts(assignment.counts(balancer.shards))
    start = time.perf_counter()
    if remove:
        balancer.remove_shards(remove)
    if add:
        balancer.add_shards(add)
    plan = plan_migration(assignment, balancer)
    after = apply_plan(assignment, plan)
    elapsed = time.perf_counter() - start
    report = RebalanceReport(
        label=label,
        moved=len(plan),
        optimal=optimal_moves(assignment, remove, add, len(balancer.shards)),
        stats_before=stats_before,
        stats_after=DistributionStats.from_counts(after.counts(balancer.shards)),
        elapsed=elapsed,
    )
    return after, report
