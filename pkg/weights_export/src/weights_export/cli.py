"""deepdc-export-vgg19 entry point."""

from __future__ import annotations

import argparse
import sys

from .errors import ExportError
from .export import ExportManifest, export_vgg19


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepdc-export-vgg19",
        description="convert a torchvision VGG19 state-dict checkpoint to a DDCW container",
    )
    parser.add_argument("--checkpoint", required=True, help="path to the .pth state dict")
    parser.add_argument("--out", required=True, help="DDCW output path")
    parser.add_argument("--arch-name", default="vgg19", help="architecture string in the metadata")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        out = export_vgg19(
            ExportManifest(checkpoint=args.checkpoint, out=args.out, architecture=args.arch_name)
        )
    except (ExportError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
