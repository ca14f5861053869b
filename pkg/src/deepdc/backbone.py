"""Backbone weights, image preprocessing, and the VGG19-features forward pass.

Weights travel in the DDCW container, a little-endian binary format:

    magic b"DDCW" | u32 version=1 | u32 metadata length | UTF-8 JSON metadata
    then per tensor: u16 name length | name | u8 rank | rank x u64 dims
                     | row-major 32-bit float data

The metadata object carries ``architecture``, ``layers`` (conv names in
network order), ``taps``, ``mean``, and ``std``. Tensors appear in layer
order as ``<layer>.weight`` (out x in x 3 x 3) then ``<layer>.bias`` (out).

The forward pass implements only what the metric needs: 3x3 stride-1
convolutions with zero padding 1, ReLU, and 2x2 stride-2 max pooling between
blocks, emitting activations at the five tap layers.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import (
    BadMagic,
    CorruptTensor,
    ImageTooSmall,
    InvalidScale,
    MissingTap,
    NonFiniteActivation,
    NonFiniteInput,
    ShapeMismatch,
    UnsupportedVersion,
)
from .rng import SplitMix64

_MAGIC = b"DDCW"
_VERSION = 1

#: conv layers of the VGG19 feature stack, in network order, with their
#: standard output widths; pooling sits between consecutive block numbers
VGG19_LAYER_PLAN = (
    ("conv1_1", 64), ("conv1_2", 64),
    ("conv2_1", 128), ("conv2_2", 128),
    ("conv3_1", 256), ("conv3_2", 256), ("conv3_3", 256), ("conv3_4", 256),
    ("conv4_1", 512), ("conv4_2", 512), ("conv4_3", 512), ("conv4_4", 512),
    ("conv5_1", 512), ("conv5_2", 512), ("conv5_3", 512), ("conv5_4", 512),
)

STANDARD_TAPS = ("conv1_2", "conv2_2", "conv3_4", "conv4_4", "conv5_4")

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ConvLayer:
    name: str
    kernel: np.ndarray  # out x in x 3 x 3, float32
    bias: np.ndarray  # out, float32


@dataclass(frozen=True)
class BackboneWeights:
    architecture: str
    layers: tuple[ConvLayer, ...]
    taps: tuple[str, ...]
    mean: tuple[float, float, float]
    std: tuple[float, float, float]


@dataclass(frozen=True)
class FeatureStack:
    """Post-ReLU activations at the tap layers, in tap order."""

    taps: tuple[tuple[str, np.ndarray], ...]  # (name, C x H x W float32)


# ---------------------------------------------------------------------------
# container read/write


def _read_exact(buf, count: int, what: str) -> bytes:
    data = buf.read(count)
    if len(data) != count:
        raise CorruptTensor(f"container truncated while reading {what}")
    return data


def _read_tensor(buf) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", _read_exact(buf, 2, "tensor name length"))
    name = _read_exact(buf, name_len, "tensor name").decode("utf-8", errors="replace")
    (rank,) = struct.unpack("<B", _read_exact(buf, 1, f"rank of {name}"))
    dims = struct.unpack(f"<{rank}Q", _read_exact(buf, 8 * rank, f"dims of {name}"))
    count = math.prod(dims)
    raw = _read_exact(buf, 4 * count, f"data of {name}")
    data = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
    return name, data


def load_weights(path) -> BackboneWeights:
    """Read and validate a DDCW container."""
    with open(path, "rb") as f:
        buf = io.BytesIO(f.read())

    if _read_exact(buf, 4, "magic") != _MAGIC:
        raise BadMagic(f"not a DDCW container: {path}")
    (version,) = struct.unpack("<I", _read_exact(buf, 4, "version"))
    if version != _VERSION:
        raise UnsupportedVersion(f"container version {version}, reader supports {_VERSION}")
    (meta_len,) = struct.unpack("<I", _read_exact(buf, 4, "metadata length"))
    try:
        meta = json.loads(_read_exact(buf, meta_len, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptTensor(f"metadata is not valid JSON: {exc}") from exc
    for key in ("architecture", "layers", "taps", "mean", "std"):
        if key not in meta:
            raise CorruptTensor(f"metadata missing field '{key}'")

    layer_names = [str(n) for n in meta["layers"]]
    if not layer_names:
        raise CorruptTensor("metadata lists no layers")
    mean = tuple(float(v) for v in meta["mean"])
    std = tuple(float(v) for v in meta["std"])
    if len(mean) != 3 or len(std) != 3:
        raise CorruptTensor("mean/std must each have 3 entries")
    if any(s <= 0 for s in std):
        raise CorruptTensor("std entries must be positive")

    layers = []
    in_channels = 3
    for layer_name in layer_names:
        tensors = {}
        for suffix in (".weight", ".bias"):
            name, data = _read_tensor(buf)
            if name != layer_name + suffix:
                raise CorruptTensor(f"expected tensor {layer_name + suffix!r}, found {name!r}")
            if not np.isfinite(data).all():
                raise CorruptTensor(f"tensor {name!r} contains non-finite values")
            tensors[suffix] = data
        kernel = tensors[".weight"]
        bias = tensors[".bias"]
        if kernel.ndim != 4 or kernel.shape[1] != in_channels or kernel.shape[2:] != (3, 3):
            raise CorruptTensor(
                f"kernel of {layer_name!r} has shape {kernel.shape}, "
                f"expected (out, {in_channels}, 3, 3)"
            )
        if bias.shape != (kernel.shape[0],):
            raise CorruptTensor(f"bias of {layer_name!r} has shape {bias.shape}, expected ({kernel.shape[0]},)")
        layers.append(ConvLayer(layer_name, kernel, bias))
        in_channels = kernel.shape[0]
    if buf.read(1):
        raise CorruptTensor("trailing data after the final tensor")

    taps = tuple(str(t) for t in meta["taps"])
    try:
        order = [layer_names.index(t) for t in taps]
    except ValueError as exc:
        missing = [t for t in taps if t not in layer_names]
        raise MissingTap(f"taps not present among layers: {missing}") from exc
    if order != sorted(order) or len(set(order)) != len(order):
        raise MissingTap(f"taps out of network order: {list(taps)}")

    return BackboneWeights(str(meta["architecture"]), tuple(layers), taps, mean, std)


def write_weights(weights: BackboneWeights, path) -> None:
    """Serialize weights as a DDCW container (deterministic bytes)."""
    meta = {
        "architecture": weights.architecture,
        "layers": [layer.name for layer in weights.layers],
        "taps": list(weights.taps),
        "mean": [float(v) for v in weights.mean],
        "std": [float(v) for v in weights.std],
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for layer in weights.layers:
            for suffix, tensor in ((".weight", layer.kernel), (".bias", layer.bias)):
                name = (layer.name + suffix).encode("utf-8")
                arr = np.ascontiguousarray(tensor, dtype="<f4")
                f.write(struct.pack("<H", len(name)))
                f.write(name)
                f.write(struct.pack("<B", arr.ndim))
                f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
                f.write(arr.tobytes())


def generate_test_backbone(seed: int, scale: int = 1) -> BackboneWeights:
    """Deterministic random-weight backbone with the VGG19 topology.

    ``scale`` divides every channel count (must be 1, 4, or 8) so the test
    suite can run cheap forward passes. Kernels are drawn uniformly from
    (-s, s) with s = sqrt(6 / fan_in) in layer order from a single splitmix64
    stream seeded by ``seed``; biases are zero. Identical arguments give a
    bit-identical backbone on every platform.
    """
    if scale not in (1, 4, 8):
        raise InvalidScale(f"scale must be one of 1, 4, 8, got {scale!r}")
    stream = SplitMix64(seed)
    layers = []
    in_channels = 3
    for name, standard_out in VGG19_LAYER_PLAN:
        out_channels = standard_out // scale
        fan_in = in_channels * 9
        s = math.sqrt(6.0 / fan_in)
        u = stream.next_float_array(out_channels * fan_in)
        kernel = ((2.0 * u - 1.0) * s).astype(np.float32).reshape(out_channels, in_channels, 3, 3)
        bias = np.zeros(out_channels, dtype=np.float32)
        layers.append(ConvLayer(name, kernel, bias))
        in_channels = out_channels
    return BackboneWeights("vgg19-test", tuple(layers), STANDARD_TAPS, IMAGENET_MEAN, IMAGENET_STD)


# ---------------------------------------------------------------------------
# image handling


def load_image(path) -> np.ndarray:
    """Decode an image file to H x W x 3 floats in [0, 1] (sRGB order).

    Grayscale images are replicated across the three channels; alpha is
    composited over white before being dropped.
    """
    with Image.open(path) as im:
        im.load()
        if im.mode == "P":
            im = im.convert("RGBA")
        if im.mode in ("RGBA", "LA"):
            background = Image.new("RGBA", im.size, (255, 255, 255, 255))
            im = Image.alpha_composite(background, im.convert("RGBA")).convert("RGB")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        pixels = np.asarray(im, dtype=np.float32) / 255.0
    return np.clip(pixels, 0.0, 1.0)


def save_image(img, path) -> None:
    """Write an H x W x 3 [0,1] array as an 8-bit PNG."""
    img = np.asarray(img, dtype=np.float64)
    quantized = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


def resize_bilinear(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of an H x W x 3 float image to (height, width).

    Pillow widens the bilinear support when downscaling, which provides the
    area-averaging prefilter; per-channel "F" mode keeps full precision.
    """
    channels = [
        np.asarray(
            Image.fromarray(np.ascontiguousarray(img[:, :, c], dtype=np.float32), mode="F").resize(
                (width, height), Image.BILINEAR
            ),
            dtype=np.float32,
        )
        for c in range(3)
    ]
    return np.stack(channels, axis=2)


def preprocess(img, short_side: int, weights: BackboneWeights) -> np.ndarray:
    """Resize so the shorter side equals ``short_side`` and normalize.

    Aspect ratio is preserved to within one pixel of rounding; images already
    at the target geometry are passed through untouched, so the operation is
    idempotent. The result is channel-major 3 x H' x W' float32 with each
    channel mapped through (value - mean_c) / std_c.
    """
    if short_side < 32:
        raise ImageTooSmall(f"short_side must be at least 32, got {short_side}")
    img = np.asarray(img, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeMismatch(f"expected an H x W x 3 image, got shape {img.shape}")
    if not np.isfinite(img).all():
        raise NonFiniteInput("image contains NaN or infinity")
    img = np.clip(img, 0.0, 1.0)

    h, w = img.shape[:2]
    if h <= w:
        target_h = short_side
        target_w = int(w * short_side / h + 0.5)
    else:
        target_w = short_side
        target_h = int(h * short_side / w + 0.5)
    if (target_h, target_w) != (h, w):
        img = resize_bilinear(img, target_w, target_h)

    mean = np.asarray(weights.mean, dtype=np.float32)
    std = np.asarray(weights.std, dtype=np.float32)
    normalized = (img - mean) / std
    return np.ascontiguousarray(normalized.transpose(2, 0, 1))


# ---------------------------------------------------------------------------
# forward pass


def conv2d_forward(inp, kernel, bias) -> np.ndarray:
    """3x3 cross-correlation, stride 1, zero padding 1, plus bias.

    Implemented as blocked im2col + matrix product so the intermediate patch
    matrix stays within a fixed memory budget at 224-pixel resolutions.
    """
    inp = np.asarray(inp, dtype=np.float32)
    kernel = np.asarray(kernel, dtype=np.float32)
    bias = np.asarray(bias, dtype=np.float32)
    if inp.ndim != 3:
        raise ShapeMismatch(f"input must be C x H x W, got shape {inp.shape}")
    cin, h, w = inp.shape
    if kernel.ndim != 4 or kernel.shape[1:] != (cin, 3, 3):
        raise ShapeMismatch(f"kernel shape {kernel.shape} incompatible with {cin} input channels")
    cout = kernel.shape[0]
    if bias.shape != (cout,):
        raise ShapeMismatch(f"bias shape {bias.shape} does not match {cout} output channels")

    padded = np.zeros((cin, h + 2, w + 2), dtype=np.float32)
    padded[:, 1:-1, 1:-1] = inp
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    kmat = kernel.reshape(cout, cin * 9)
    out = np.empty((cout, h, w), dtype=np.float32)
    # ~32 MB of float32 patches per block
    rows_per_block = max(1, (8 << 20) // max(1, w * cin * 9))
    for r0 in range(0, h, rows_per_block):
        r1 = min(r0 + rows_per_block, h)
        patches = windows[:, r0:r1].transpose(1, 2, 0, 3, 4).reshape((r1 - r0) * w, cin * 9)
        out[:, r0:r1, :] = (patches @ kmat.T).T.reshape(cout, r1 - r0, w)
    out += bias[:, None, None]
    return out


def _max_pool_2x2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    trimmed = x[:, : h2 * 2, : w2 * 2]
    return trimmed.reshape(c, h2, 2, w2, 2).max(axis=(2, 4))


def _block_number(layer_name: str) -> int:
    return int(layer_name[4 : layer_name.index("_")])


def extract_features(weights: BackboneWeights, inp) -> FeatureStack:
    """Run the conv/ReLU/pool stack and collect post-ReLU tap activations."""
    x = np.asarray(inp, dtype=np.float32)
    if x.ndim != 3:
        raise ShapeMismatch(f"preprocessed input must be C x H x W, got shape {x.shape}")
    collected = {}
    current_block = _block_number(weights.layers[0].name)
    for layer in weights.layers:
        block = _block_number(layer.name)
        if block > current_block:
            x = _max_pool_2x2(x)
            current_block = block
        x = conv2d_forward(x, layer.kernel, layer.bias)
        np.maximum(x, 0.0, out=x)
        if layer.name in weights.taps:
            if not np.isfinite(x).all():
                raise NonFiniteActivation(f"non-finite activation at tap {layer.name!r}")
            collected[layer.name] = x.copy()
    return FeatureStack(tuple((name, collected[name]) for name in weights.taps))
