"""Stateless seed derivation.

Every random stream in a run is keyed by ``(master_seed, role, index)`` so
results do not depend on execution order or worker count.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser; a bijection on 64-bit integers."""
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    # Two rounds: the outer one is a bijection in ``index`` for a fixed
    # (master, tag), so indices under one tag never collide.
    base = splitmix64((int(master_seed) & MASK64) ^ tag_hash(tag))
    return splitmix64((base + (int(index) & MASK64) * GOLDEN) & MASK64)


def rng_for(master_seed: int, tag: str, index: int = 0):
    return np.random.default_rng(derive_seed(master_seed, tag, index))
