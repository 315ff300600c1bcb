"""RUSH_R-style placement over epochs of shards.

Every batch of never-seen shards added in one mutation forms an epoch whose
weight is its number of live shards.  A key walks the epochs from newest to
oldest; at epoch ``j`` a seeded draw accepts it with probability
``w_j / (w_0 + ... + w_j)``, and a second draw picks one of the epoch's live
shards uniformly.  Removing a shard only shrinks its epoch; re-adding a shard
that was removed puts it back into the epoch it came from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PlacementError
from ..hashing import hash_pair, hash_pair_array
from .base import Balancer, Membership, ShardId


@dataclass(frozen=True)
class Epoch:
    members: tuple[ShardId, ...]  # every shard ever placed in this epoch
    live: tuple[ShardId, ...]  # ascending

    @property
    def weight(self) -> int:
        return len(self.live)


@dataclass(frozen=True)
class RushState:
    epochs: tuple[Epoch, ...]
    seed: int = 0

    def cumulative_weights(self) -> list[int]:
        total, out = 0, []
        for e in self.epochs:
            total += e.weight
            out.append(total)
        return out


def _accept_salt(j: int) -> int:
    return 2 * j


def _pick_salt(j: int) -> int:
    return 2 * j + 1


def lookup_rush(key: int, state: RushState) -> ShardId:
    cumulative = state.cumulative_weights()
    if not cumulative or cumulative[-1] == 0:
        raise PlacementError("rush: no live shards")
    for j in range(len(state.epochs) - 1, -1, -1):
        epoch = state.epochs[j]
        w = epoch.weight
        if w == 0:
            continue
        # accept when u / 2**64 < w / W, compared exactly in integers
        u = hash_pair(key, _accept_salt(j), state.seed)
        if u * cumulative[j] < w << 64:
            return epoch.live[hash_pair(key, _pick_salt(j), state.seed) % w]
    raise AssertionError("unreachable: the oldest non-empty epoch always accepts")


def lookup_rush_array(keys: np.ndarray, state: RushState) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.full(len(keys), -1, dtype=np.int64)
    pending = np.arange(len(keys))
    cumulative = state.cumulative_weights()
    for j in range(len(state.epochs) - 1, -1, -1):
        epoch = state.epochs[j]
        w = epoch.weight
        if w == 0 or not pending.size:
            continue
        k = keys[pending]
        if w == cumulative[j]:
            accepted = np.ones(len(k), dtype=bool)
        else:
            u = hash_pair_array(k, _accept_salt(j), state.seed)
            # u * W < w * 2**64  <=>  u < ceil(w * 2**64 / W)
            threshold = -((-w << 64) // cumulative[j])
            if threshold > (1 << 64) - 1:
                accepted = np.ones(len(k), dtype=bool)
            else:
                accepted = u < np.uint64(threshold)
        hit = pending[accepted]
        picks = hash_pair_array(keys[hit], _pick_salt(j), state.seed) % np.uint64(w)
        out[hit] = np.asarray(epoch.live, dtype=np.int64)[picks.astype(np.int64)]
        pending = pending[~accepted]
    if pending.size:
        raise PlacementError("rush: no live shards")
    return out


class RushBalancer(Balancer):
    name = "rush"
    history_dependent = True

    def _rebuild_initial(self) -> None:
        live = self._membership.live
        self.state = RushState((Epoch(live, live),), self.seed)

    def _on_add(self, membership: Membership, batch: tuple[int, ...]) -> None:
        home = {s: j for j, e in enumerate(self.state.epochs) for s in e.members}
        epochs = list(self.state.epochs)
        fresh = []
        for s in batch:
            if s in home:
                e = epochs[home[s]]
                epochs[home[s]] = Epoch(e.members, tuple(sorted(e.live + (s,))))
            else:
                fresh.append(s)
        if fresh:
            fresh.sort()
            epochs.append(Epoch(tuple(fresh), tuple(fresh)))
        self.state = RushState(tuple(epochs), self.seed)

    def _on_remove(self, membership: Membership, batch: tuple[int, ...]) -> None:
        gone = set(batch)
        epochs = tuple(Epoch(e.members, tuple(s for s in e.live if s not in gone)) for e in self.state.epochs)
        self.state = RushState(epochs, self.seed)

    def _rebuild(self, live: tuple[ShardId, ...]) -> None:
        raise NotImplementedError

    def lookup(self, key: int) -> ShardId:
        return lookup_rush(key, self.state)

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        return lookup_rush_array(keys, self.state)
