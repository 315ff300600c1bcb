"""Maglev lookup-table hashing.

Every shard walks its own permutation of the table slots, defined by an
``(offset, skip)`` pair taken from two independent hashes of the shard id.
Shards claim free slots round-robin, in ascending id order, until the table
is full.  Lookups are ``table[key mod M]``.  Any membership change rebuilds the
table from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import CapacityError, ConfigurationError, PlacementError
from ..hashing import hash_pair
from .base import Balancer, ShardId

DEFAULT_TABLE_SIZE = 103

_OFFSET_SALT = 0
_SKIP_SALT = 1


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def shard_preference(shard: ShardId, table_size: int, seed: int = 0) -> tuple[int, int]:
    """``(offset, skip)`` of a shard's slot permutation."""
    offset = hash_pair(shard, _OFFSET_SALT, seed) % table_size
    skip = 1 + hash_pair(shard, _SKIP_SALT, seed) % (table_size - 1)
    return offset, skip


@dataclass(frozen=True)
class MaglevState:
    table: tuple[ShardId, ...]
    preferences: dict[ShardId, tuple[int, int]]

    @property
    def size(self) -> int:
        return len(self.table)


def build_maglev_table(live: Iterable[ShardId], table_size: int = DEFAULT_TABLE_SIZE, seed: int = 0) -> MaglevState:
    shards = sorted(live)
    if not is_prime(table_size):
        raise ConfigurationError(f"maglev table size must be prime, got {table_size}")
    if not shards:
        raise PlacementError("maglev: empty membership")
    if len(shards) > table_size:
        raise CapacityError(f"maglev: {len(shards)} shards exceed table size {table_size}")

    prefs = {s: shard_preference(s, table_size, seed) for s in shards}
    table: list[ShardId | None] = [None] * table_size
    cursor = dict.fromkeys(shards, 0)
    filled = 0
    while True:
        for s in shards:
            offset, skip = prefs[s]
            j = cursor[s]
            slot = (offset + j * skip) % table_size
            while table[slot] is not None:
                j += 1
                slot = (offset + j * skip) % table_size
            table[slot] = s
            cursor[s] = j + 1
            filled += 1
            if filled == table_size:
                return MaglevState(tuple(table), prefs)


def lookup_maglev(key: int, state: MaglevState) -> ShardId:
    return state.table[key % len(state.table)]


class MaglevBalancer(Balancer):
    name = "maglev"

    def __init__(self, shards, seed: int = 0, table_size: int = DEFAULT_TABLE_SIZE) -> None:
        if not is_prime(table_size):
            raise ConfigurationError(f"maglev table size must be prime, got {table_size}")
        self.table_size = table_size
        super().__init__(shards, seed)

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        state = build_maglev_table(live, self.table_size, self.seed)
        self.state, self._table = state, np.asarray(state.table, dtype=np.int64)

    def lookup(self, key: int) -> ShardId:
        return self.state.table[key % self.table_size]

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        return self._table[keys % np.uint64(self.table_size)]
