"""Rendezvous (highest random weight) hashing."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..errors import PlacementError
from ..hashing import _MIX1, _MIX2, MASK64, hash_prefix, hash_prefix_array, mix64_array
from .base import Balancer, ShardId

# Bounds the (keys x shards) score matrix in lookup_many.
_CHUNK = 1 << 16


def lookup_rendezvous(key: int, live: Iterable[ShardId], seed: int = 0) -> ShardId:
    """Shard with the largest ``hash_pair(key, shard, seed)``; ties go to the smaller id."""
    live = sorted(live)
    if not live:
        raise PlacementError("rendezvous: empty membership")
    return _argmax(key, live, seed)


def _argmax(key: int, live: Sequence[ShardId], seed: int) -> ShardId:
    # live is ascending, so the strict comparison keeps the smaller id on ties
    # mix64 inlined: this loop dominates scalar lookup cost
    prefix = hash_prefix(key, seed)
    best, winner = -1, live[0]
    for s in live:
        z = prefix ^ s
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        z ^= z >> 31
        if z > best:
            best, winner = z, s
    return winner


class RendezvousBalancer(Balancer):
    name = "rendezvous"

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        self._live = live
        self._live_array = np.asarray(live, dtype=np.uint64)

    def lookup(self, key: int) -> ShardId:
        return _argmax(key, self._live, self.seed)

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        out = np.empty(len(keys), dtype=np.int64)
        shards = self._live_array
        for lo in range(0, len(keys), _CHUNK):
            prefix = hash_prefix_array(keys[lo:lo + _CHUNK], self.seed)
            scores = mix64_array(prefix[:, None] ^ shards[None, :])
            # argmax returns the first maximum, i.e. the smallest id on ties
            out[lo:lo + _CHUNK] = shards[np.argmax(scores, axis=1)].astype(np.int64)
        return out
