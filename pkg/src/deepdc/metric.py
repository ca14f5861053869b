"""DeepDC quality score: distance correlation of deep features, averaged.

For each tap the C channel maps are flattened into a C x (H*W) observation
matrix, one observation per channel, and the squared sample distance
correlation between the reference and distorted matrices is computed. The
final score is

    D(x, y) = 1 - mean_j R2_j

over the five taps, so 0 means indistinguishable under the backbone and
higher values mean worse quality. D is symmetric in its arguments and stays
inside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import BackboneWeights, FeatureStack, extract_features, preprocess
from .dcor_core import DcorConfig, sample_dcorr
from .errors import ShapeMismatch, TapMismatch


@dataclass(frozen=True)
class QualityScore:
    value: float
    profile: tuple[tuple[str, float], ...]  # (tap name, r_squared) in tap order


def layer_dcorr_profile(fx: FeatureStack, fy: FeatureStack, cfg: DcorConfig = DcorConfig()) -> tuple[tuple[str, float], ...]:
    """Per-tap squared distance correlation between two feature stacks."""
    if len(fx.taps) != len(fy.taps):
        raise TapMismatch(f"stacks have {len(fx.taps)} vs {len(fy.taps)} taps")
    profile = []
    for (name_x, ax), (name_y, ay) in zip(fx.taps, fy.taps):
        if name_x != name_y:
            raise TapMismatch(f"tap name mismatch: {name_x!r} vs {name_y!r}")
        if ax.shape != ay.shape:
            raise TapMismatch(f"tap {name_x!r} geometry differs: {ax.shape} vs {ay.shape}")
        c = ax.shape[0]
        x = ax.reshape(c, -1)
        y = ay.reshape(c, -1)
        profile.append((name_x, sample_dcorr(x, y, cfg)))
    return tuple(profile)


def deepdc_score(
    ref,
    dist,
    weights: BackboneWeights,
    short_side: int = 224,
    cfg: DcorConfig = DcorConfig(),
) -> QualityScore:
    """Score a distorted image against its reference (higher = worse).

    Both images are resized independently to the same short side; their
    aspect ratios must agree so the feature geometries match (mismatches are
    an error, never a silent crop).
    """
    px = preprocess(ref, short_side, weights)
    py = preprocess(dist, short_side, weights)
    if px.shape != py.shape:
        raise ShapeMismatch(
            f"images disagree after resizing (aspect ratios differ): {px.shape[1:]} vs {py.shape[1:]}"
        )
    profile = layer_dcorr_profile(extract_features(weights, px), extract_features(weights, py), cfg)
    r_squared = np.array([r for _, r in profile], dtype=np.float64)
    value = float(min(max(1.0 - r_squared.mean(), 0.0), 1.0))
    return QualityScore(value, profile)
