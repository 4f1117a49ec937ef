"""Seeded standard-normal sampling with a portable, documented generator.

Presets are only reproducible if every producer derives bit-identical
noise from the same 64-bit seed, so the full pipeline from seed to
float32 tensor is pinned here (and in the README format docs):

1. Raw stream: Philox4x64-10, keyed directly with the seed
   (``key = [seed]``, counter starting at zero). This is numpy's
   ``np.random.Philox`` bit generator; the seed is used as the raw key,
   bypassing numpy's SeedSequence, so non-numpy implementations only
   need the published Philox4x64-10 round function.
2. Each 64-bit output ``x`` becomes a double in the open interval (0,1):
   ``u = ((x >> 11) + 0.5) * 2**-53``.
3. Consecutive uniform pairs map to two normals via Box-Muller:
   ``r = sqrt(-2 ln u1)``, ``z0 = r cos(2 pi u2)``, ``z1 = r sin(2 pi u2)``,
   emitted in that order.
4. Arithmetic in float64, final cast to float32.
"""

from __future__ import annotations

import numpy as np

__all__ = ["normal_stream", "sample_noise", "uniform_stream"]

_U64_MASK = 0xFFFFFFFFFFFFFFFF


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """n doubles in (0,1) from the raw Philox4x64-10 stream for ``seed``."""
    if n < 0:
        raise ValueError(f"stream length must be >= 0, got {n}")
    bits = np.random.Philox(key=int(seed) & _U64_MASK).random_raw(n)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normal_stream(seed: int, n: int) -> np.ndarray:
    """n i.i.d. N(0,1) float32 draws, deterministic in ``seed``."""
    pairs = (n + 1) // 2
    u = uniform_stream(seed, 2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs, dtype=np.float64)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n].astype(np.float32)


def sample_noise(seed: int, height: int, width: int) -> np.ndarray:
    """Standard-normal noise image of shape (1, 3, height, width).

    Dimensions must be multiples of 4 so the result can feed the deep
    encoder directly.
    """
    if height % 4 or width % 4 or height <= 0 or width <= 0:
        raise ValueError(
            f"noise size must be positive multiples of 4, got {height}x{width}"
        )
    flat = normal_stream(seed, 3 * height * width)
    return flat.reshape(1, 3, height, width)
