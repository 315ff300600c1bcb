import math
import random

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

import oracles
from shardbench.balancers import (
    ALGORITHMS,
    AnchorBalancer,
    Epoch,
    Membership,
    RingState,
    RushState,
    balancer_lookup,
    build_maglev_table,
    lookup_jump,
    lookup_linear,
    lookup_maglev,
    lookup_rendezvous,
    lookup_ring,
    lookup_rush,
    make_balancer,
    resolve_algorithms,
)
from shardbench.balancers.jump import lookup_jump_array
from shardbench.errors import CapacityError, ConfigurationError, PlacementError, UnknownShardError
from shardbench.hashing import hash_pair, hash_pair_array

HISTORY_FREE = ("linear", "consistent", "rendezvous", "maglev", "jump")
MINIMAL_DISRUPTION = ("consistent", "rendezvous", "anchor")

keys_strategy = st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=30)


def random_keys(n, seed=0):
    return hash_pair_array(np.arange(n, dtype=np.uint64), 0xBEEF, seed)


# -- membership ---------------------------------------------------------------

def test_membership_fold():
    m = Membership((0, 1, 2, 3)).remove([1, 2]).add([7]).add([2])
    assert m.live == (0, 2, 3, 7)
    assert m.log == (("remove", (1, 2)), ("add", (7,)), ("add", (2,)))
    assert hash(m) == hash(Membership((0, 1, 2, 3), m.log))


@pytest.mark.parametrize("mutate", [
    lambda m: m.remove([9]),
    lambda m: m.add([0]),
    lambda m: m.add([5, 5]),
])
def test_membership_rejects_bad_changes(mutate):
    with pytest.raises(UnknownShardError):
        mutate(Membership((0, 1)))


def test_membership_rejects_duplicates_and_negatives():
    with pytest.raises(UnknownShardError):
        Membership((1, 1))
    with pytest.raises(ValueError):
        Membership((-1,))


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_cannot_remove_last_shard(algorithm):
    b = make_balancer(algorithm, [3])
    with pytest.raises(PlacementError):
        b.remove_shards([3])
    assert b.shards == (3,)


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_empty_membership_is_rejected(algorithm):
    with pytest.raises(PlacementError):
        make_balancer(algorithm, [])


def test_resolve_algorithms():
    assert resolve_algorithms("all") == list(ALGORITHMS)
    assert resolve_algorithms("AnchorHash, maglev") == ["maglev", "anchor"]
    with pytest.raises(ConfigurationError):
        resolve_algorithms("ketama")


# -- linear ------------------------------------------------------------------

def test_linear_examples():
    assert all(lookup_linear(k, [0]) == 0 for k in (0, 1, 2**64 - 1))
    assert lookup_linear(5, [0, 1, 2]) == 2
    assert lookup_linear(5, [10, 20, 30]) == 30
    with pytest.raises(PlacementError):
        lookup_linear(5, [])


def test_linear_spread_within_binomial_bounds():
    b = make_balancer("linear", range(32))
    counts = np.bincount(b.lookup_many(random_keys(10_000)), minlength=32)
    assert counts.min() >= 250 and counts.max() <= 380


# -- consistent ring -----------------------------------------------------------

def test_ring_structure():
    state = RingState.build(range(5), points_per_shard=16, seed=9)
    assert len(state.positions) == 80
    assert list(state.positions) == sorted(state.positions)
    for s in range(5):
        assert state.owners.count(s) == 16
    assert set(state.positions) == {hash_pair(s, r, 9) for s in range(5) for r in range(16)}


def test_ring_lookup_boundaries():
    single = RingState.build([4], seed=1)
    assert all(lookup_ring(k, single) == 4 for k in (0, 2**63, 2**64 - 1))
    state = RingState.build(range(6), seed=2)
    for pos, owner in zip(state.positions, state.owners):
        assert lookup_ring(pos, state) == owner
        if pos > 0:
            assert lookup_ring(pos - 1, state) == owner or pos - 1 in state.positions
    # past the last point wraps to the first
    assert lookup_ring(state.positions[-1] + 1, state) == state.owners[0]
    with pytest.raises(PlacementError):
        lookup_ring(1, RingState((), (), 16))


def test_ring_rejects_zero_points():
    with pytest.raises(ConfigurationError):
        make_balancer("consistent", range(3), points_per_shard=0)


# -- rendezvous ----------------------------------------------------------------

def test_rendezvous_argmax_property():
    live = list(range(10))
    for key in random_keys(200).tolist():
        winner = lookup_rendezvous(key, live, seed=3)
        assert winner == max(live, key=lambda s: hash_pair(key, s, 3))
        others = [s for s in live if s != winner]
        loser = others[key % len(others)]
        assert lookup_rendezvous(key, [s for s in live if s != loser], 3) == winner
        assert lookup_rendezvous(key, others, 3) == max(others, key=lambda s: hash_pair(key, s, 3))
    assert lookup_rendezvous(99, {7}, 0) == 7
    with pytest.raises(PlacementError):
        lookup_rendezvous(1, [], 0)


def test_rendezvous_accepts_unsorted_sets():
    assert lookup_rendezvous(12345, [5, 1, 3], 0) == lookup_rendezvous(12345, (1, 3, 5), 0)


# -- RUSH ----------------------------------------------------------------------

def test_rush_single():
    state = RushState((Epoch((8,), (8,)),), seed=0)
    assert lookup_rush(123, state) == 8
    with pytest.raises(PlacementError):
        lookup_rush(1, RushState((), 0))


def test_rush_equal_epochs_split_evenly():
    b = make_balancer("rush", range(16), seed=4)
    b.add_shards(range(16, 32))
    assert len(b.state.epochs) == 2
    owners = b.lookup_many(random_keys(10_000, seed=1))
    newer = int((owners >= 16).sum())
    sigma = math.sqrt(10_000 * 0.25)
    assert abs(newer - 5000) <= 3 * sigma


def test_rush_readd_returns_to_original_epoch():
    b = make_balancer("rush", range(8), seed=1)
    b.add_shards([8, 9, 10])
    b.remove_shards([2, 9])
    assert [e.weight for e in b.state.epochs] == [7, 2]
    b.add_shards([9, 2, 20])
    assert [e.live for e in b.state.epochs] == [tuple(range(8)), (8, 9, 10), (20,)]


def test_rush_matches_fraction_oracle_across_epochs():
    b = make_balancer("rush", range(5), seed=6)
    b.add_shards([5, 6, 7])
    b.remove_shards([1])
    b.add_shards([9])
    epochs = [list(e.live) for e in b.state.epochs]
    for key in random_keys(300, seed=2).tolist():
        assert b.lookup(key) == oracles.rush(key, epochs, 6)


# -- Maglev --------------------------------------------------------------------

def test_maglev_single_shard_owns_table():
    state = build_maglev_table([6], 103)
    assert set(state.table) == {6} and state.size == 103


def test_maglev_slot_balance_over_seeds():
    for seed in range(100):
        n = 1 + seed % 40
        state = build_maglev_table(range(n), 103, seed)
        counts = np.bincount(state.table, minlength=n)
        bound = math.ceil(103 / n) - 103 // n + 1
        assert counts.max() - counts.min() <= bound
        assert counts.min() >= 1


def test_maglev_configuration_errors():
    with pytest.raises(ConfigurationError):
        build_maglev_table(range(3), 100)
    with pytest.raises(ConfigurationError):
        make_balancer("maglev", range(3), table_size=21)
    with pytest.raises(CapacityError):
        build_maglev_table(range(8), 7)
    with pytest.raises(PlacementError):
        build_maglev_table([], 7)


def test_maglev_lookup_is_table_index():
    state = build_maglev_table(range(5), 103, 0)
    assert lookup_maglev(0, state) == state.table[0]
    assert lookup_maglev(103 * 7 + 5, state) == state.table[5]


def test_maglev_lookup_follows_slot_shares():
    b = make_balancer("maglev", range(32), seed=8)
    owners = b.lookup_many(random_keys(10_000, seed=3))
    slots = np.bincount(b.state.table, minlength=32)
    counts = np.bincount(owners, minlength=32)
    p = slots / 103
    sigma = np.sqrt(10_000 * p * (1 - p))
    assert np.all(np.abs(counts - 10_000 * p) <= 3 * sigma + 1)


# -- Jump ----------------------------------------------------------------------

def test_jump_reference_vectors():
    # published reference outputs of the jump recurrence
    assert lookup_jump(1, 1) == 0
    assert lookup_jump(256, 1024) == 520
    assert lookup_jump(42, 57) == 43
    assert lookup_jump(0xDEAD10CC, 666) == 361
    with pytest.raises(PlacementError):
        lookup_jump(1, 0)


@given(key=st.integers(0, 2**64 - 1), n=st.integers(1, 500))
def test_jump_append_only(key, n):
    before = lookup_jump(key, n)
    assert 0 <= before < n
    assert lookup_jump(key, n + 1) in (before, n)


def test_jump_array_matches_scalar_and_exact_oracle():
    keys = random_keys(2000, seed=4)
    for n in (1, 2, 7, 32, 1000):
        got = lookup_jump_array(keys, n).tolist()
        assert got == [lookup_jump(int(k), n) for k in keys]
    assert [lookup_jump(int(k), 57) for k in keys[:300]] == [oracles.jump_bucket(int(k), 57) for k in keys[:300]]


# -- AnchorHash ----------------------------------------------------------------

def test_anchor_zero_iteration_case():
    b = AnchorBalancer(range(64), capacity=64)
    for key in random_keys(500).tolist():
        assert b.lookup(key) == key % 64


def test_anchor_remove_then_add_is_identity():
    keys = random_keys(10_000, seed=5)
    b = make_balancer("anchor", range(32), seed=2)
    before = b.lookup_many(keys)
    b.remove_shard(17)
    b.add_shard(17)
    assert np.array_equal(b.lookup_many(keys), before)


def test_anchor_full_capacity():
    b = make_balancer("anchor", range(4), capacity=4)
    with pytest.raises(CapacityError):
        b.add_shard(4)
    with pytest.raises(CapacityError):
        make_balancer("anchor", range(5), capacity=4)


def test_anchor_remove_unknown():
    b = make_balancer("anchor", range(4))
    with pytest.raises(UnknownShardError):
        b.remove_shard(9)
    with pytest.raises(UnknownShardError):
        b.state.remove_bucket(40)


def test_anchor_removal_is_minimal_and_spreads():
    keys = random_keys(10_000, seed=6)
    b = make_balancer("anchor", range(32), seed=3)
    before = b.lookup_many(keys)
    b.remove_shard(5)
    after = b.lookup_many(keys)
    changed = before != after
    assert np.all(before[changed] == 5)
    assert changed.sum() == (before == 5).sum()
    survivors = set(range(32)) - {5}
    assert set(after[changed].tolist()) == survivors


def test_anchor_revival_takes_fair_share():
    keys = random_keys(10_000, seed=7)
    b = make_balancer("anchor", range(24), seed=4)
    before = b.lookup_many(keys)
    b.add_shard(24)  # revives the bucket on top of the removal stack
    after = b.lookup_many(keys)
    moved = before != after
    assert np.all(after[moved] == 24)
    p = 1 / 25
    assert abs(moved.sum() - 10_000 * p) <= 3 * math.sqrt(10_000 * p * (1 - p))


def test_anchor_new_ids_take_free_buckets():
    b = make_balancer("anchor", [10, 20, 30], capacity=8)
    b.remove_shard(20)
    b.add_shards([99])
    assert b.shards == (10, 30, 99)
    assert b.bucket_of(99) == 1
    owners = set(b.lookup_many(random_keys(2000)).tolist())
    assert owners == {10, 30, 99}


# -- façade and cross-algorithm properties -------------------------------------

def test_facade_dispatch_identity():
    m = Membership(tuple(range(32)))
    keys = random_keys(10_000, seed=8).tolist()
    assert all(balancer_lookup("linear", m, None, 0, k) == lookup_linear(k, m.live) for k in keys)


def test_facade_determinism_and_params():
    m = Membership(tuple(range(8))).remove([3]).add([11])
    keys = random_keys(500).tolist()
    for algorithm in ALGORITHMS:
        a = ALGORITHMS[algorithm].from_membership(m, seed=5)
        b = ALGORITHMS[algorithm].from_membership(m, seed=5)
        assert [a.lookup(k) for k in keys] == [b.lookup(k) for k in keys]
        assert [balancer_lookup(algorithm, m, {}, 5, k) for k in keys[:50]] == [a.lookup(k) for k in keys[:50]]
    via = [balancer_lookup("maglev", m, {"table_size": 13}, 0, k) for k in keys[:50]]
    assert via == [make_balancer("maglev", m.live, table_size=13).lookup(k) for k in keys[:50]]


@st.composite
def histories(draw):
    initial = draw(st.sets(st.integers(0, 40), min_size=1, max_size=20))
    m = Membership(tuple(sorted(initial)))
    for _ in range(draw(st.integers(0, 4))):
        live = list(m.live)
        if len(live) > 1 and draw(st.booleans()):
            k = draw(st.integers(1, len(live) - 1))
            m = m.remove(draw(st.permutations(live))[:k])
        else:
            fresh = [s for s in range(41, 60) if s not in live] + [s for s in range(41) if s not in live]
            m = m.add(fresh[: draw(st.integers(1, 3))])
    return m


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(m=histories(), keys=keys_strategy, seed=st.integers(0, 2**64 - 1))
def test_range_and_batch_agreement(m, keys, seed):
    arr = np.asarray(keys, dtype=np.uint64)
    for algorithm, cls in ALGORITHMS.items():
        b = cls.from_membership(m, seed=seed)
        scalar = [b.lookup(k) for k in keys]
        assert set(scalar) <= set(m.live)
        assert b.lookup_many(arr).tolist() == scalar


@settings(max_examples=40, deadline=None)
@given(m=histories(), seed=st.integers(0, 2**64 - 1))
def test_history_independence(m, seed):
    keys = random_keys(300, seed=seed % 1000)
    for algorithm in HISTORY_FREE:
        replayed = ALGORITHMS[algorithm].from_membership(m, seed=seed)
        direct = make_balancer(algorithm, m.live, seed=seed)
        assert np.array_equal(replayed.lookup_many(keys), direct.lookup_many(keys))


@settings(max_examples=40, deadline=None)
@given(m=histories(), seed=st.integers(0, 2**64 - 1), data=st.data())
def test_minimal_disruption(m, seed, data):
    keys = random_keys(2000, seed=seed % 1000)
    for algorithm in MINIMAL_DISRUPTION:
        b = ALGORITHMS[algorithm].from_membership(m, seed=seed)
        before = b.lookup_many(keys)
        if len(m.live) > 1:
            gone = data.draw(st.sampled_from(m.live))
            b.remove_shard(gone)
            after = b.lookup_many(keys)
            changed = before != after
            assert np.all(before[changed] == gone)
            before = after
        new = max(m.live) + 1 + data.draw(st.integers(0, 5))
        if len(b.shards) < 64:
            b.add_shard(new)
            after = b.lookup_many(keys)
            changed = before != after
            assert np.all(after[changed] == new)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 60), seed=st.integers(0, 2**64 - 1))
def test_jump_balancer_append(n, seed):
    keys = random_keys(1000, seed=seed % 997)
    b = make_balancer("jump", range(n), seed=seed)
    before = b.lookup_many(keys)
    b.add_shard(n)
    after = b.lookup_many(keys)
    assert np.all((after == before) | (after == n))


@settings(max_examples=30, deadline=None)
@given(m=histories(), seed=st.integers(0, 2**64 - 1))
def test_maglev_completeness(m, seed):
    b = ALGORITHMS["maglev"].from_membership(m, seed=seed)
    table = b.state.table
    assert len(table) == 103
    assert set(table) == set(m.live)


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_matches_oracle_on_random_live_sets(algorithm):
    rng = random.Random(hash(algorithm) & 0xFFFF)
    for _ in range(5):
        live = sorted(rng.sample(range(60), rng.randint(1, 10)))
        seed = rng.getrandbits(64)
        b = make_balancer(algorithm, live, seed=seed)
        for key in (rng.getrandbits(64) for _ in range(40)):
            assert b.lookup(key) == oracles.fresh_mapping(algorithm, key, live, seed)
