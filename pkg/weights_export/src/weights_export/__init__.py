"""VGG19 checkpoint to DDCW container conversion."""

from .errors import ExportError, LayerCountMismatch, SourceUnavailable
from .export import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    STANDARD_TAPS,
    VGG19_FEATURES,
    ExportManifest,
    collect_conv_layers,
    export_vgg19,
    load_checkpoint,
    write_container,
)

__all__ = [
    "ExportError",
    "ExportManifest",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "LayerCountMismatch",
    "STANDARD_TAPS",
    "SourceUnavailable",
    "VGG19_FEATURES",
    "collect_conv_layers",
    "export_vgg19",
    "load_checkpoint",
    "write_container",
]

__version__ = "0.1.0"
