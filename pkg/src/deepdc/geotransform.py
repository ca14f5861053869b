"""Imperceptible geometric transforms and the augmented-dataset builder.

Each distorted image gets four variants: an integer translation of about 5%
of one image axis, a 3 degree rotation, a 1.05x upscale cropped back to the
original size, and the three combined. The transforms are mild enough that
the human opinion score of the source image is carried over unchanged, which
is exactly what makes the augmented set a robustness probe for full-reference
metrics.

All randomness (axis and sign choices) comes from per-record splitmix64
substreams, so serial and parallel builds produce identical bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .backbone import load_image, resize_bilinear, save_image
from .errors import UnknownKind
from .evalkit import DatasetManifest, ManifestRecord, write_manifest
from .rng import SplitMix64, derive_substream

TRANSFORM_KINDS = ("translation", "rotation", "scaling", "combined")

#: file-name suffix per transform kind
_SUFFIX = {"translation": "t", "rotation": "r", "scaling": "s", "combined": "c"}


@dataclass(frozen=True)
class GtConfig:
    translate_frac: float = 0.05
    rotate_deg: float = 3.0
    scale_factor: float = 1.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.translate_frac < 0.5:
            raise ValueError(f"translate_frac must be in [0, 0.5), got {self.translate_frac}")
        if not abs(self.rotate_deg) < 45.0:
            raise ValueError(f"rotate_deg must satisfy |deg| < 45, got {self.rotate_deg}")
        if not 1.0 < self.scale_factor < 2.0:
            raise ValueError(f"scale_factor must be in (1, 2), got {self.scale_factor}")


def _translate(img: np.ndarray, cfg: GtConfig, stream: SplitMix64) -> np.ndarray:
    # one randomly chosen axis (0 = vertical, 1 = horizontal), random sign;
    # both draws happen before the zero-shift early-out so combined runs
    # consume the stream identically
    axis = int(stream.next_uint64() & 1)
    sign = stream.next_sign()
    shift = sign * int(cfg.translate_frac * img.shape[axis] + 0.5)
    if shift == 0:
        return img.copy()
    pad = [(0, 0), (0, 0), (0, 0)]
    pad[axis] = (shift, 0) if shift > 0 else (0, -shift)
    # numpy "symmetric" repeats the edge row, the edge-including reflection
    padded = np.pad(img, pad, mode="symmetric")
    window = [slice(None)] * 3
    window[axis] = slice(0, img.shape[axis]) if shift > 0 else slice(-shift, -shift + img.shape[axis])
    return padded[tuple(window)]


def _rotate(img: np.ndarray, cfg: GtConfig, stream: SplitMix64) -> np.ndarray:
    angle = stream.next_sign() * cfg.rotate_deg
    rotated = ndimage.rotate(
        img, angle, axes=(0, 1), reshape=False, order=1, mode="reflect", prefilter=False
    )
    return np.clip(rotated, 0.0, 1.0)


def _scale(img: np.ndarray, cfg: GtConfig) -> np.ndarray:
    h, w = img.shape[:2]
    up_h = max(h, int(h * cfg.scale_factor + 0.5))
    up_w = max(w, int(w * cfg.scale_factor + 0.5))
    up = resize_bilinear(img, up_w, up_h)
    top = (up_h - h) // 2
    left = (up_w - w) // 2
    return np.clip(up[top : top + h, left : left + w], 0.0, 1.0)


def apply_transform(img, kind: str, cfg: GtConfig, stream: SplitMix64) -> np.ndarray:
    """Apply one transform kind; output dimensions always equal the input's."""
    img = np.asarray(img, dtype=np.float32)
    if kind == "translation":
        out = _translate(img, cfg, stream)
    elif kind == "rotation":
        out = _rotate(img, cfg, stream)
    elif kind == "scaling":
        out = _scale(img, cfg)
    elif kind == "combined":
        out = _scale(_rotate(_translate(img, cfg, stream), cfg, stream), cfg)
    else:
        raise UnknownKind(f"unknown transform kind {kind!r}, expected one of {TRANSFORM_KINDS}")
    return np.clip(np.asarray(out, dtype=np.float32), 0.0, 1.0)


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def build_gt_dataset(manifest: DatasetManifest, cfg: GtConfig, out_dir) -> DatasetManifest:
    """Write originals plus 4 geometric variants per record, with a manifest.

    The output manifest has exactly 5 records per input record, each carrying
    the source MOS unchanged. Reference images are copied once (re-encoded as
    PNG), variant files are named ``<stem>__{t|r|s|c}.png``. Per-file IO
    failures are collected and raised together after the build pass.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    failures: list[str] = []
    written: dict[str, str] = {}  # output name -> source path, guards stem collisions
    records_out: list[ManifestRecord] = []

    def emit(name: str, source: str, img) -> bool:
        previous = written.get(name)
        if previous == source:
            return True
        if previous is not None:
            failures.append(f"{name}: output name collision between {previous} and {source}")
            return False
        try:
            save_image(img, os.path.join(out_dir, name))
        except OSError as exc:
            failures.append(f"{name}: {exc}")
            return False
        written[name] = source
        return True

    for index, rec in enumerate(manifest.records):
        try:
            ref_img = load_image(manifest.resolve(rec.ref))
            dist_img = load_image(manifest.resolve(rec.dist))
        except (OSError, ValueError) as exc:
            failures.append(f"record {index} ({rec.dist}): {exc}")
            continue
        ref_name = _stem(rec.ref) + ".png"
        dist_name = _stem(rec.dist) + ".png"
        if not emit(ref_name, rec.ref, ref_img) or not emit(dist_name, rec.dist, dist_img):
            continue
        records_out.append(ManifestRecord(ref_name, dist_name, rec.mos))
        stream = derive_substream(cfg.seed, index)
        for kind in TRANSFORM_KINDS:
            variant = apply_transform(dist_img, kind, cfg, stream)
            variant_name = f"{_stem(rec.dist)}__{_SUFFIX[kind]}.png"
            if emit(variant_name, rec.dist + "#" + kind, variant):
                records_out.append(ManifestRecord(ref_name, variant_name, rec.mos))

    result = DatasetManifest(tuple(records_out), os.path.abspath(out_dir))
    write_manifest(result, os.path.join(out_dir, "manifest.csv"))
    if failures:
        raise OSError("dataset build had failures: " + "; ".join(failures))
    return result
