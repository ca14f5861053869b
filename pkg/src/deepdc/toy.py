"""Synthetic series contrasting Pearson correlation with distance correlation.

Draws X uniform on (-1, 1) and pairs it with a linear response (2X + 1) and a
nonlinear one (X^2). Pearson sees the linear dependence only; distance
correlation flags both, which is the property the quality metric leans on.

The ``dcorr`` statistic reported here is the unsquared sample distance
correlation (the square root of :func:`deepdc.sample_dcorr`), which puts it
on the same scale as Pearson for a like-for-like comparison: for the
quadratic response it sits near 0.5 where Pearson is near 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dcor_core import DcorConfig, pearson_corr, sample_dcorr
from .rng import SplitMix64


@dataclass(frozen=True)
class ToyResult:
    x: np.ndarray
    y_linear: np.ndarray
    y_quadratic: np.ndarray
    stats: dict


def run_toy(n: int = 1000, seed: int = 1, cfg: DcorConfig = DcorConfig()) -> ToyResult:
    """Seeded comparison of the two dependence measures on both responses."""
    stream = SplitMix64(seed)
    x = 2.0 * stream.next_float_array(n) - 1.0
    y_linear = 2.0 * x + 1.0
    y_quadratic = x * x
    stats = {
        "n": n,
        "seed": seed,
        "linear": {
            "pearson": pearson_corr(x, y_linear),
            "dcorr": math.sqrt(sample_dcorr(x[:, None], y_linear[:, None], cfg)),
        },
        "quadratic": {
            "pearson": pearson_corr(x, y_quadratic),
            "dcorr": math.sqrt(sample_dcorr(x[:, None], y_quadratic[:, None], cfg)),
        },
    }
    return ToyResult(x, y_linear, y_quadratic, stats)
