"""Small deterministic helpers used by several modules.

The 64-bit mixing functions below are fixed constants of the toolkit:
candidate sampling, per-entry seed streams, and the hash-projection text
embedder all derive from them, so changing any constant changes every
recorded result. splitmix64 follows Steele, Lea and Flood (2014); FNV-1a
uses the standard 64-bit offset basis and prime.
"""
from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state and return (new_state, output word)."""
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_seed(*parts: int) -> int:
    """Mix integer parts into one 64-bit seed.

    Used to give every (run, step, candidate) triple its own RNG stream
    without any cross-talk: derive_seed(seed, step, i) is stable across
    platforms and process counts.
    """
    h = 0
    for part in parts:
        h ^= part & _MASK64
        _, h = splitmix64(h)
    return h


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & _MASK64
    return h


def round_half_up(x: float) -> int:
    """Round to nearest integer with ties toward +inf.

    Python's round() uses banker's rounding; the mock oracles need the
    floor(x + 0.5) convention so independent implementations of the same
    formula agree.
    """
    return int(math.floor(x + 0.5))
