"""Shard placement algorithms behind one interface.

>>> b = make_balancer("rendezvous", range(4), seed=7)
>>> b.lookup(12345) in b.shards
True
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable

from ..errors import ConfigurationError
from .anchor import AnchorBalancer, AnchorState, anchor_lookup
from .base import Balancer, Membership, ShardId
from .jump import JumpBalancer, lookup_jump
from .linear import LinearBalancer, lookup_linear
from .maglev import MaglevBalancer, MaglevState, build_maglev_table, lookup_maglev
from .rendezvous import RendezvousBalancer, lookup_rendezvous
from .ring import ConsistentBalancer, RingState, lookup_ring
from .rush import Epoch, RushBalancer, RushState, lookup_rush

#: Display order used by reports; matches the usual presentation of the algorithms.
ALGORITHMS: dict[str, type[Balancer]] = {
    cls.name: cls
    for cls in (
        LinearBalancer,
        ConsistentBalancer,
        RendezvousBalancer,
        RushBalancer,
        MaglevBalancer,
        JumpBalancer,
        AnchorBalancer,
    )
}

DISPLAY_NAMES = {
    "linear": "Linear",
    "consistent": "Consistent",
    "rendezvous": "Rendezvous",
    "rush": "RUSH",
    "maglev": "Maglev",
    "jump": "Jump",
    "anchor": "AnchorHash",
}


def resolve_algorithms(spec: str | Iterable[str]) -> list[str]:
    """Parse ``"all"`` or a comma separated list into canonical names, in display order."""
    if isinstance(spec, str):
        names = list(ALGORITHMS) if spec.strip().lower() == "all" else spec.split(",")
    else:
        names = list(spec)
    aliases = {display.lower(): name for name, display in DISPLAY_NAMES.items()}
    out = []
    for raw in names:
        key = raw.strip().lower()
        key = aliases.get(key, key)
        if key not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {raw!r}; choose from {', '.join(ALGORITHMS)}")
        if key not in out:
            out.append(key)
    return [name for name in ALGORITHMS if name in out]


def make_balancer(algorithm: str, shards: Iterable[ShardId], seed: int = 0, **params) -> Balancer:
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}") from None
    return cls(tuple(shards), seed=seed, **params)


@lru_cache(maxsize=64)
def _cached(algorithm: str, membership: Membership, params: tuple, seed: int) -> Balancer:
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    return ALGORITHMS[algorithm].from_membership(membership, seed=seed, **dict(params))


def balancer_lookup(algorithm: str, membership: Membership, params: dict | None, seed: int, key: int) -> ShardId:
    """Owner of ``key`` for the balancer reached by replaying ``membership``."""
    frozen = tuple(sorted((params or {}).items()))
    return _cached(algorithm, membership, frozen, seed).lookup(key)


__all__ = [
    "ALGORITHMS",
    "DISPLAY_NAMES",
    "AnchorBalancer",
    "AnchorState",
    "Balancer",
    "ConsistentBalancer",
    "Epoch",
    "JumpBalancer",
    "LinearBalancer",
    "MaglevBalancer",
    "MaglevState",
    "Membership",
    "RendezvousBalancer",
    "RingState",
    "RushBalancer",
    "RushState",
    "anchor_lookup",
    "balancer_lookup",
    "build_maglev_table",
    "lookup_jump",
    "lookup_linear",
    "lookup_maglev",
    "lookup_rendezvous",
    "lookup_ring",
    "lookup_rush",
    "make_balancer",
    "resolve_algorithms",
]
