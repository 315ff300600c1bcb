"""AnchorHash.

The anchor set ``[0, capacity)`` is fixed.  Buckets outside the working set
remember, in ``A[b]``, the working-set size right after they were removed;
a key that lands on a removed bucket is re-hashed into ``[0, A[b])`` and the
``K`` successor links resolve buckets that were removed even earlier.  Removed
buckets sit on a stack and are revived in LIFO order, which makes
remove-then-add an exact inverse.

``AnchorState`` is the bucket-level structure.  ``AnchorBalancer`` keeps a
bijection between live shard ids and buckets on top of it.
"""

from __future__ import annotations

import numpy as np

from ..errors import CapacityError, PlacementError, UnknownShardError
from ..hashing import hash_pair, hash_pair_array
from .base import Balancer, Membership, ShardId

DEFAULT_CAPACITY = 64


class AnchorState:
    """Bucket arrays of AnchorHash.

    A: removal size per bucket, 0 for working buckets
    W: working buckets by location (first ``size`` entries are live)
    L: location of each bucket in ``W``
    K: successor of each removed bucket
    R: stack of removed buckets
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY, working: int | None = None, seed: int = 0) -> None:
        working = capacity if working is None else working
        if capacity < 1:
            raise CapacityError("anchor capacity must be >= 1")
        if not 0 < working <= capacity:
            raise CapacityError(f"working set of {working} does not fit anchor capacity {capacity}")
        self.capacity = capacity
        self.seed = seed
        self.size = capacity
        self.A = [0] * capacity
        self.W = list(range(capacity))
        self.L = list(range(capacity))
        self.K = list(range(capacity))
        self.R: list[int] = []
        for _ in range(working, capacity):
            self._pop_last()

    def _pop_last(self) -> int:
        self.size -= 1
        b = self.W[self.size]
        self.A[b] = self.size
        self.R.append(b)
        return b

    def is_live(self, bucket: int) -> bool:
        return 0 <= bucket < self.capacity and self.A[bucket] == 0

    @property
    def working_set(self) -> list[int]:
        return sorted(self.W[:self.size])

    def remove_bucket(self, b: int) -> None:
        if not self.is_live(b):
            raise UnknownShardError(f"bucket {b} is not in the working set")
        if self.size == 1:
            raise PlacementError("cannot remove the last working bucket")
        self.size -= 1
        n = self.size
        self.A[b] = n
        last = self.W[n]
        self.W[self.L[b]] = last
        self.L[last] = self.L[b]
        self.K[b] = last
        self.R.append(b)

    def add_bucket(self) -> int:
        """Revive the most recently removed bucket and return it."""
        if not self.R:
            raise CapacityError(f"anchor set full ({self.capacity} buckets)")
        b = self.R.pop()
        n = self.size
        self.A[b] = 0
        self.L[self.W[n]] = n
        self.W[self.L[b]] = b
        self.K[b] = b
        self.size = n + 1
        return b

    def peek_revival(self) -> int | None:
        return self.R[-1] if self.R else None

    def copy(self) -> AnchorState:
        new = object.__new__(AnchorState)
        new.capacity, new.seed, new.size = self.capacity, self.seed, self.size
        new.A, new.W, new.L, new.K, new.R = (list(x) for x in (self.A, self.W, self.L, self.K, self.R))
        return new


def anchor_lookup(key: int, state: AnchorState) -> int:
    """Working bucket of ``key``."""
    A, K = state.A, state.K
    b = key % state.capacity
    while A[b] > 0:
        h = hash_pair(key, b, state.seed) % A[b]
        while A[h] >= A[b]:
            h = K[h]
        b = h
    return b


def anchor_lookup_array(keys: np.ndarray, state: AnchorState) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    A = np.asarray(state.A, dtype=np.int64)
    K = np.asarray(state.K, dtype=np.int64)
    b = (keys % np.uint64(state.capacity)).astype(np.int64)
    pending = np.flatnonzero(A[b] > 0)
    while pending.size:
        cur = b[pending]
        limit = A[cur]
        h = (hash_pair_array(keys[pending], cur.astype(np.uint64), state.seed)
             % limit.astype(np.uint64)).astype(np.int64)
        follow = A[h] >= limit
        while follow.any():
            h[follow] = K[h[follow]]
            follow = A[h] >= limit
        b[pending] = h
        pending = pending[A[h] > 0]
    return b


class AnchorBalancer(Balancer):
    """AnchorHash over arbitrary shard ids.

    Initial shards take buckets ``0..n-1`` in ascending id order.  Adding a
    shard revives the bucket on top of the removal stack; when a batch re-adds
    shards that were removed, each popped bucket goes back to the shard that
    used to own it, so a batch re-add in LIFO order restores the old mapping
    exactly.
    """

    name = "anchor"
    history_dependent = True

    def __init__(self, shards, seed: int = 0, capacity: int = DEFAULT_CAPACITY) -> None:
        self.capacity = capacity
        super().__init__(shards, seed)

    def _rebuild_initial(self) -> None:
        live = self._membership.live
        if len(live) > self.capacity:
            raise CapacityError(f"anchor: {len(live)} shards exceed capacity {self.capacity}")
        self.state = AnchorState(self.capacity, len(live), self.seed)
        self._bucket_of = {s: b for b, s in enumerate(live)}
        self._shard_of = dict(enumerate(live))
        self._refresh_table()

    def _refresh_table(self) -> None:
        table = np.full(self.capacity, -1, dtype=np.int64)
        for b, s in self._shard_of.items():
            if self.state.is_live(b):
                table[b] = s
        self._table = table

    def _on_remove(self, membership: Membership, batch: tuple[int, ...]) -> None:
        state = self.state.copy()
        shard_of = dict(self._shard_of)
        for s in sorted(batch):
            state.remove_bucket(self._bucket_of[s])
        self._commit(state, self._bucket_of, shard_of)

    def _on_add(self, membership: Membership, batch: tuple[int, ...]) -> None:
        if len(membership.live) > self.capacity:
            raise CapacityError(f"anchor: {len(membership.live)} shards exceed capacity {self.capacity}")
        state = self.state.copy()
        bucket_of, shard_of = dict(self._bucket_of), dict(self._shard_of)
        pending = sorted(batch)
        while pending:
            b = state.add_bucket()
            previous = shard_of.get(b)
            s = previous if previous in pending else pending[0]
            pending.remove(s)
            old = bucket_of.get(s)
            if old is not None and old != b and shard_of.get(old) == s:
                del shard_of[old]
            bucket_of[s], shard_of[b] = b, s
        self._commit(state, bucket_of, shard_of)

    def _commit(self, state: AnchorState, bucket_of: dict, shard_of: dict) -> None:
        self.state, self._bucket_of, self._shard_of = state, bucket_of, shard_of
        self._refresh_table()

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:  # pragma: no cover - hooks above replace it
        raise NotImplementedError

    def bucket_of(self, shard: ShardId) -> int:
        return self._bucket_of[shard]

    def lookup(self, key: int) -> ShardId:
        return self._shard_of[anchor_lookup(key, self.state)]

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        return self._table[anchor_lookup_array(keys, self.state)]
