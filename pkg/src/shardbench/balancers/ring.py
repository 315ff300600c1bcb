"""Consistent hashing on a ring of virtual points."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, PlacementError
from ..hashing import hash_pair
from .base import Balancer, ShardId

DEFAULT_POINTS_PER_SHARD = 16


@dataclass(frozen=True)
class RingState:
    """Ring points sorted by ``(position, shard, replica)``."""

    positions: tuple[int, ...]
    owners: tuple[ShardId, ...]
    points_per_shard: int

    @classmethod
    def build(cls, live, points_per_shard: int = DEFAULT_POINTS_PER_SHARD, seed: int = 0) -> RingState:
        if points_per_shard < 1:
            raise ConfigurationError("points_per_shard must be >= 1")
        points = sorted(
            (hash_pair(s, r, seed), s, r) for s in live for r in range(points_per_shard)
        )
        return cls(
            positions=tuple(p for p, _, _ in points),
            owners=tuple(s for _, s, _ in points),
            points_per_shard=points_per_shard,
        )


def lookup_ring(key: int, state: RingState) -> ShardId:
    """Owner of the first point at or clockwise after ``key``."""
    if not state.positions:
        raise PlacementError("ring: no points")
    i = bisect_left(state.positions, key)
    if i == len(state.positions):
        i = 0
    return state.owners[i]


class ConsistentBalancer(Balancer):
    name = "consistent"

    def __init__(self, shards, seed: int = 0, points_per_shard: int = DEFAULT_POINTS_PER_SHARD) -> None:
        self.points_per_shard = points_per_shard
        super().__init__(shards, seed)

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        state = RingState.build(live, self.points_per_shard, self.seed)
        arrays = (
            np.asarray(state.positions, dtype=np.uint64),
            np.asarray(state.owners, dtype=np.int64),
        )
        self.state, self._arrays = state, arrays

    def lookup(self, key: int) -> ShardId:
        return lookup_ring(key, self.state)

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        positions, owners = self._arrays
        idx = np.searchsorted(positions, np.asarray(keys, dtype=np.uint64), side="left")
        idx[idx == len(positions)] = 0
        return owners[idx]
