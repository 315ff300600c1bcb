from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar, Iterable

import numpy as np

from ..errors import PlacementError, UnknownShardError
from ..hashing import check_seed

ShardId = int


@dataclass(frozen=True)
class Membership:
    """Live shard set plus the batch mutation history that produced it.

    ``log`` holds ``("add" | "remove", shard_ids)`` batches; each batch is one
    atomic membership change.  Instances are immutable and hashable so they can
    key caches.
    """

    initial: tuple[ShardId, ...]
    log: tuple[tuple[str, tuple[ShardId, ...]], ...] = ()
    live: tuple[ShardId, ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        initial = tuple(int(s) for s in self.initial)
        if len(set(initial)) != len(initial):
            raise UnknownShardError(f"duplicate shard ids in {initial}")
        if any(s < 0 for s in initial):
            raise ValueError("shard ids must be non-negative")
        object.__setattr__(self, "initial", initial)
        live = set(initial)
        for op, ids in self.log:
            live = _apply(live, op, ids)
        object.__setattr__(self, "live", tuple(sorted(live)))

    def add(self, ids: Iterable[ShardId]) -> Membership:
        return Membership(self.initial, self.log + (("add", _batch(ids)),))

    def remove(self, ids: Iterable[ShardId]) -> Membership:
        return Membership(self.initial, self.log + (("remove", _batch(ids)),))

    def __len__(self) -> int:
        return len(self.live)


def _batch(ids: Iterable[ShardId]) -> tuple[ShardId, ...]:
    batch = tuple(int(s) for s in ids)
    if len(set(batch)) != len(batch):
        raise UnknownShardError(f"duplicate shard ids in batch {batch}")
    return batch


def _apply(live: set[int], op: str, ids: tuple[int, ...]) -> set[int]:
    if op == "add":
        clash = live.intersection(ids)
        if clash:
            raise UnknownShardError(f"shards already live: {sorted(clash)}")
        if any(s < 0 for s in ids):
            raise ValueError("shard ids must be non-negative")
        return live | set(ids)
    if op == "remove":
        missing = set(ids) - live
        if missing:
            raise UnknownShardError(f"shards not live: {sorted(missing)}")
        return live - set(ids)
    raise ValueError(f"unknown membership operation {op!r}")


class Balancer(ABC):
    """Maps 64-bit keys to live shards.

    Subclasses keep algorithm state derived from the membership.  Mutations
    build the new state completely and then swap it in, so readers never
    observe a half-updated balancer.
    """

    name: ClassVar[str]
    history_dependent: ClassVar[bool] = False

    def __init__(self, shards: Iterable[ShardId], seed: int = 0) -> None:
        self.seed = check_seed(seed)
        self._membership = Membership(tuple(shards))
        if not self._membership.live:
            raise PlacementError(f"{self.name}: cannot build over an empty shard set")
        self._rebuild_initial()

    @classmethod
    def from_membership(cls, membership: Membership, seed: int = 0, **params) -> Balancer:
        balancer = cls(membership.initial, seed=seed, **params)
        for op, ids in membership.log:
            if op == "add":
                balancer.add_shards(ids)
            else:
                balancer.remove_shards(ids)
        return balancer

    @property
    def membership(self) -> Membership:
        return self._membership

    @property
    def shards(self) -> tuple[ShardId, ...]:
        """Live shard ids, ascending."""
        return self._membership.live

    def add_shards(self, ids: Iterable[ShardId]) -> None:
        ids = tuple(ids)
        new = self._membership.add(ids)
        self._on_add(new, new.log[-1][1])
        self._membership = new

    def remove_shards(self, ids: Iterable[ShardId]) -> None:
        ids = tuple(ids)
        new = self._membership.remove(ids)
        if not new.live:
            raise PlacementError(f"{self.name}: removing {sorted(ids)} leaves no live shard")
        self._on_remove(new, new.log[-1][1])
        self._membership = new

    def add_shard(self, shard: ShardId) -> None:
        self.add_shards((shard,))

    def remove_shard(self, shard: ShardId) -> None:
        self.remove_shards((shard,))

    @abstractmethod
    def lookup(self, key: int) -> ShardId:
        """Owner of a single key."""

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        """Owners of an array of keys; must agree with ``lookup`` element-wise."""
        keys = np.asarray(keys, dtype=np.uint64)
        return np.fromiter((self.lookup(int(k)) for k in keys), dtype=np.int64, count=len(keys))

    # Hooks.  The default is a full rebuild from the new live set, which is
    # right for every history-independent algorithm.

    def _rebuild_initial(self) -> None:
        self._rebuild(self._membership.live)

    def _on_add(self, membership: Membership, batch: tuple[int, ...]) -> None:
        self._rebuild(membership.live)

    def _on_remove(self, membership: Membership, batch: tuple[int, ...]) -> None:
        self._rebuild(membership.live)

    @abstractmethod
    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shards={len(self.shards)}, seed={self.seed})"
