"""Seedable 64-bit hashing shared by every placement algorithm.

The construction is word oriented: the input is split into big-endian 8-byte
words (the last one zero padded), the state is initialised from the seed and
the input length, and every word is folded in through the SplitMix64
finalizer.  Only 64-bit integer arithmetic is involved, so the output is the
same on every platform and can be evaluated on numpy ``uint64`` arrays with
bit-identical results.

``hash_pair(a, b, seed)`` is ``hash64`` of the 16-byte big-endian
concatenation of ``a`` and ``b``; it has a fast path because the placement
algorithms call it millions of times.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

#: Seeds and hash values are plain ints in ``[0, 2**64)``.
Seed = int
HashValue = int


def check_seed(seed: int) -> int:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return seed


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijection on 64-bit words with full avalanche."""
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


@lru_cache(maxsize=4096)
def _initial_state(length: int, seed: int) -> int:
    return mix64((seed + GOLDEN * (length + 1)) & MASK64)


def hash64(data: bytes, seed: Seed = 0) -> HashValue:
    """Hash a byte string to a 64-bit unsigned integer."""
    check_seed(seed)
    data = bytes(data)
    n = len(data)
    h = _initial_state(n, seed)
    if n % 8:
        data += b"\0" * (8 - n % 8)
    for i in range(0, len(data), 8):
        h = mix64(h ^ int.from_bytes(data[i:i + 8], "big"))
    return h


def hash_prefix(a: int, seed: Seed = 0) -> int:
    """State of ``hash_pair(a, ., seed)`` after the first word.

    ``hash_pair(a, b, seed) == mix64(hash_prefix(a, seed) ^ b)``; callers that
    score one key against many shards compute the prefix once.
    """
    return mix64(_initial_state(16, seed) ^ a)


def hash_pair(a: int, b: int, seed: Seed = 0) -> HashValue:
    """Hash two 64-bit words, equal to ``hash64(a.to_bytes(8) + b.to_bytes(8))``."""
    return mix64(mix64(_initial_state(16, seed) ^ a) ^ b)


# numpy counterparts.  uint64 array arithmetic wraps modulo 2**64, which is
# exactly the masking done above.

_U30, _U27, _U31 = np.uint64(30), np.uint64(27), np.uint64(31)
_UMIX1, _UMIX2 = np.uint64(_MIX1), np.uint64(_MIX2)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _U30)) * _UMIX1
    z = (z ^ (z >> _U27)) * _UMIX2
    return z ^ (z >> _U31)


def hash_prefix_array(a: np.ndarray, seed: Seed = 0) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    return mix64_array(a ^ np.uint64(_initial_state(16, check_seed(seed))))


def hash_pair_array(a, b, seed: Seed = 0) -> np.ndarray:
    """Vectorised ``hash_pair``; ``a`` and ``b`` broadcast against each other."""
    b = np.asarray(b, dtype=np.uint64)
    return mix64_array(hash_prefix_array(a, seed) ^ b)

