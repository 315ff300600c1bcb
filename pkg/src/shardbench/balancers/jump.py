"""Jump consistent hash.

Jump only knows buckets ``[0, n)``.  Arbitrary live ids are handled by
compaction: bucket ``i`` is the ``i``-th smallest live id.  Appending a shard
with an id larger than every live id is therefore a pure append, while
dropping an intermediate shard renumbers everything after it.
"""

from __future__ import annotations

import numpy as np

from ..errors import PlacementError
from .base import Balancer, ShardId

_LCG_MUL = 2862933555777941757
_MASK64 = (1 << 64) - 1
_TWO31 = float(1 << 31)


def lookup_jump(key: int, n: int) -> int:
    """Bucket index in ``[0, n)``."""
    if n < 1:
        raise PlacementError("jump: bucket count must be >= 1")
    b, j = -1, 0
    while j < n:
        b = j
        key = (key * _LCG_MUL + 1) & _MASK64
        j = int((b + 1) * (_TWO31 / float((key >> 33) + 1)))
    return b


def lookup_jump_array(keys: np.ndarray, n: int) -> np.ndarray:
    """Vectorised ``lookup_jump``; the float steps match the scalar ones bit for bit."""
    if n < 1:
        raise PlacementError("jump: bucket count must be >= 1")
    key = np.array(keys, dtype=np.uint64)
    b = np.full(key.shape, -1, dtype=np.int64)
    j = np.zeros(key.shape, dtype=np.int64)
    active = np.ones(key.shape, dtype=bool)
    mul, one, s33 = np.uint64(_LCG_MUL), np.uint64(1), np.uint64(33)
    while active.any():
        b[active] = j[active]
        k = key[active] * mul + one
        key[active] = k
        step = _TWO31 / ((k >> s33).astype(np.float64) + 1.0)
        j[active] = ((b[active] + 1).astype(np.float64) * step).astype(np.int64)
        active = j < n
    return b


class JumpBalancer(Balancer):
    name = "jump"

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        self._live, self._live_array = live, np.asarray(live, dtype=np.int64)

    def lookup(self, key: int) -> ShardId:
        return self._live[lookup_jump(key, len(self._live))]

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        return self._live_array[lookup_jump_array(keys, len(self._live))]
