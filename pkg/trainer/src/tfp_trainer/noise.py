"""Portable seeded noise, implementing the engine's documented recipe
(engine README, "Seeded noise recipe") so exported presets reproduce
bit-identically: Philox4x64-10 raw stream keyed with the seed, u64 ->
(0,1) doubles via ((x >> 11) + 0.5) * 2**-53, Box-Muller pairs, float64
math cast to float32.

Training-time noise batches do not need cross-implementation stability and
use torch's native sampler; this module is for export.
"""

from __future__ import annotations

import numpy as np
import torch


def normal_stream(seed: int, n: int) -> np.ndarray:
    pairs = (n + 1) // 2
    bits = np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF).random_raw(2 * pairs)
    u = ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs, dtype=np.float64)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n].astype(np.float32)


def sample_noise(seed: int, height: int, width: int) -> torch.Tensor:
    if height % 4 or width % 4 or height <= 0 or width <= 0:
        raise ValueError(f"noise size must be positive multiples of 4, got {height}x{width}")
    flat = normal_stream(seed, 3 * height * width)
    return torch.from_numpy(flat.reshape(1, 3, height, width))
