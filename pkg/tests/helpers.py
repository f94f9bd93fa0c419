"""Shared builders for the test suite."""
from __future__ import annotations

import numpy as np

from freqadv.image import Image

MASK64 = (1 << 64) - 1


def random_image(seed: int, size: int = 64, channels: int = 3) -> Image:
    """Uniform-noise test image; band energy is spread across all radii."""
    rng = np.random.default_rng(seed)
    return Image.from_array(rng.uniform(0.0, 255.0, size=(size, size, channels)))


def smooth_image(seed: int, size: int = 64) -> Image:
    """Low-frequency texture; nearly all energy sits near DC."""
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 1.0, size=(size + 8, size + 8, 3))
    kernel = np.ones(9) / 9.0
    for axis in (0, 1):
        noise = np.apply_along_axis(
            lambda m: np.convolve(m, kernel, mode="same"), axis, noise
        )
    noise = noise[4:4 + size, 4:4 + size, :]
    lo, hi = noise.min(), noise.max()
    return Image.from_array(20.0 + (noise - lo) / (hi - lo) * 215.0)


def reference_splitmix64(state: int) -> tuple[int, int]:
    """Independent splitmix64 used to cross-check the package's version."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def reference_fnv1a64(data: bytes) -> int:
    """Independent FNV-1a used to cross-check the package's version."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def reference_token_signs(token: str, dim: int) -> list[int]:
    """Independent hash-projection sign vector (pure-int arithmetic)."""
    state = reference_fnv1a64(token.encode("utf-8"))
    out = []
    for _ in range(dim):
        state, word = reference_splitmix64(state)
        out.append(1 if word >> 63 else -1)
    return out
