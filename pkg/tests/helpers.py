"""Deterministic data helpers shared by the test modules."""

from __future__ import annotations

import numpy as np

from deepdc import SplitMix64


def normals(stream: SplitMix64, count: int) -> np.ndarray:
    """Standard normals via Box-Muller on the splitmix stream."""
    u1 = 1.0 - stream.next_float_array(count)
    u2 = stream.next_float_array(count)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def uniform_matrix(stream: SplitMix64, n: int, d: int, lo: float = -2.0, hi: float = 2.0) -> np.ndarray:
    return lo + (hi - lo) * stream.next_float_array(n * d).reshape(n, d)


def random_image(seed: int, h: int, w: int) -> np.ndarray:
    return SplitMix64(seed).next_float_array(h * w * 3).reshape(h, w, 3)


def gaussian_noise(seed: int, shape) -> np.ndarray:
    return normals(SplitMix64(seed), int(np.prod(shape))).reshape(shape)
