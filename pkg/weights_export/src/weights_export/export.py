"""Read a torchvision VGG19 checkpoint and write a DDCW v1 container.

The checkpoint is the ``state_dict`` layout of ``torchvision.models.vgg19``:
conv parameters live under ``features.<index>.weight`` / ``.bias``, where the
indices enumerate the feature stack with its ReLU and pooling slots.  Only the
16 conv layers are exported; classifier tensors are ignored.

The container layout (little-endian throughout):

    b"DDCW"  u32 version=1  u32 metadata_length  metadata_json
    then per conv layer, weight before bias:
        u16 name_length, name, u8 rank, rank x u64 dims, float32 data

Metadata is a JSON object with keys architecture, layers, taps, mean, std,
serialized with sorted keys and no whitespace so re-exports are byte-identical.
"""

from __future__ import annotations

import json
import os
import pickle
import struct
import zipfile
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import LayerCountMismatch, SourceUnavailable

#: (torchvision features index, layer name, output channels), network order
VGG19_FEATURES = (
    (0, "conv1_1", 64),
    (2, "conv1_2", 64),
    (5, "conv2_1", 128),
    (7, "conv2_2", 128),
    (10, "conv3_1", 256),
    (12, "conv3_2", 256),
    (14, "conv3_3", 256),
    (16, "conv3_4", 256),
    (19, "conv4_1", 512),
    (21, "conv4_2", 512),
    (23, "conv4_3", 512),
    (25, "conv4_4", 512),
    (28, "conv5_1", 512),
    (30, "conv5_2", 512),
    (32, "conv5_3", 512),
    (34, "conv5_4", 512),
)

STANDARD_TAPS = ("conv1_2", "conv2_2", "conv3_4", "conv4_4", "conv5_4")
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

_MAGIC = b"DDCW"
_VERSION = 1


@dataclass(frozen=True)
class ExportManifest:
    checkpoint: str
    out: str
    taps: tuple[str, ...] = STANDARD_TAPS
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD
    architecture: str = "vgg19"

    def __post_init__(self):
        if tuple(self.taps) != STANDARD_TAPS:
            raise ValueError(f"taps must be exactly {STANDARD_TAPS}, got {tuple(self.taps)}")


def load_checkpoint(path) -> dict[str, torch.Tensor]:
    """Load a ``.pth`` state dict, unwrapping a ``state_dict`` entry if present."""
    if not os.path.isfile(path):
        raise SourceUnavailable(f"checkpoint not found: {path}")
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except (RuntimeError, ValueError, EOFError, pickle.UnpicklingError, zipfile.BadZipFile) as exc:
        raise SourceUnavailable(f"cannot deserialize {path}: {exc}") from exc
    if isinstance(state, dict) and isinstance(state.get("state_dict"), dict):
        state = state["state_dict"]
    if not isinstance(state, dict):
        raise SourceUnavailable(f"{path} does not contain a state dict")
    return state


def collect_conv_layers(state: dict) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Pull the 16 conv kernel/bias pairs out of a checkpoint state dict.

    Tensors come back as float32 numpy arrays regardless of checkpoint
    precision. Any deviation from the fixed VGG19 feature topology raises
    LayerCountMismatch.
    """
    conv_indices = {index for index, _, _ in VGG19_FEATURES}
    for key, value in state.items():
        if not key.startswith("features.") or not key.endswith(".weight"):
            continue
        if isinstance(value, torch.Tensor) and value.dim() == 4:
            index = int(key.split(".")[1])
            if index not in conv_indices:
                raise LayerCountMismatch(f"unexpected conv layer at features.{index}")

    layers = []
    in_channels = 3
    for index, name, out_channels in VGG19_FEATURES:
        pair = []
        for suffix, shape in (
            ("weight", (out_channels, in_channels, 3, 3)),
            ("bias", (out_channels,)),
        ):
            key = f"features.{index}.{suffix}"
            tensor = state.get(key)
            if not isinstance(tensor, torch.Tensor):
                raise LayerCountMismatch(f"checkpoint is missing {key} ({name})")
            if tuple(tensor.shape) != shape:
                raise LayerCountMismatch(
                    f"{key} has shape {tuple(tensor.shape)}, expected {shape}"
                )
            data = tensor.detach().to(torch.float32).cpu().numpy()
            if not np.isfinite(data).all():
                raise SourceUnavailable(f"{key} contains non-finite values")
            pair.append(data)
        layers.append((name, pair[0], pair[1]))
        in_channels = out_channels
    return layers


def write_container(path, architecture, layers, taps, mean, std) -> None:
    meta = {
        "architecture": architecture,
        "layers": [name for name, _, _ in layers],
        "taps": list(taps),
        "mean": [float(v) for v in mean],
        "std": [float(v) for v in std],
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name, kernel, bias in layers:
            for suffix, tensor in ((".weight", kernel), (".bias", bias)):
                encoded = (name + suffix).encode("utf-8")
                arr = np.ascontiguousarray(tensor, dtype="<f4")
                f.write(struct.pack("<H", len(encoded)))
                f.write(encoded)
                f.write(struct.pack("<B", arr.ndim))
                f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
                f.write(arr.tobytes())


def export_vgg19(manifest: ExportManifest) -> str:
    """Convert the checkpoint named by the manifest; returns the output path."""
    state = load_checkpoint(manifest.checkpoint)
    layers = collect_conv_layers(state)
    write_container(
        manifest.out, manifest.architecture, layers, manifest.taps, manifest.mean, manifest.std
    )
    return manifest.out
