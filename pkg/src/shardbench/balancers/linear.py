"""Modulo placement, the PostgreSQL hash-partitioning scheme.

Live ids are sorted so ``key mod n`` indexes a dense partition list even after
intermediate shards have been dropped.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import PlacementError
from .base import Balancer, ShardId


def lookup_linear(key: int, live: Sequence[ShardId]) -> ShardId:
    if not live:
        raise PlacementError("linear: empty membership")
    return live[key % len(live)]


class LinearBalancer(Balancer):
    name = "linear"

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        self._live = live
        self._live_array = np.asarray(live, dtype=np.int64)

    def lookup(self, key: int) -> ShardId:
        return lookup_linear(key, self._live)

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        return self._live_array[keys % np.uint64(len(self._live))]
