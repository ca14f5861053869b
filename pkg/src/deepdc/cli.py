"""Command-line interface.

Subcommands:

    score              score one reference/distorted pair
    eval               run a manifest and write the JSON report
    gen-gt             build the geometric-transform augmented dataset
    toy                Pearson vs distance correlation on synthetic series
    export-distmat     dump one tap's double-centered distance matrices
    make-test-weights  write a deterministic random-weight DDCW container

Exit codes: 0 success, 1 usage error, 2 runtime error. With ``--json`` the
standard output stream carries machine-readable JSON only.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .backbone import (
    extract_features,
    generate_test_backbone,
    load_image,
    load_weights,
    preprocess,
    write_weights,
)
from .dcor_core import DcorConfig, double_center, pairwise_distances, sample_dcorr
from .errors import DeepdcError, ShapeMismatch, UsageError
from .evalkit import evaluate_manifest, read_manifest
from .geotransform import GtConfig, build_gt_dataset
from .metric import deepdc_score
from .toy import run_toy


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _short_side(text: str) -> int:
    value = int(text)
    if value < 32:
        raise argparse.ArgumentTypeError(f"must be >= 32, got {text}")
    return value


def _translate_frac(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 0.5:
        raise argparse.ArgumentTypeError(f"must be in [0, 0.5), got {text}")
    return value


def _rotate_deg(text: str) -> float:
    value = float(text)
    if not abs(value) < 45.0:
        raise argparse.ArgumentTypeError(f"must satisfy |deg| < 45, got {text}")
    return value


def _scale_factor(text: str) -> float:
    value = float(text)
    if not 1.0 < value < 2.0:
        raise argparse.ArgumentTypeError(f"must be in (1, 2), got {text}")
    return value


def _emit(args, doc: dict, text_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _add_common(sub, weights_required: bool = False):
    if weights_required:
        sub.add_argument("--weights", required=True, help="DDCW weight container")
    sub.add_argument("--short-side", type=_short_side, default=224, help="resize target (default 224)")
    sub.add_argument("--eps", type=_nonneg_float, default=1e-6, help="ratio stabilizer (default 1e-6)")
    sub.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepdc", description="full-reference image quality via distance correlation")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("score", help="score one reference/distorted pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    _add_common(p, weights_required=True)
    p.set_defaults(handler=_cmd_score)

    p = commands.add_parser("eval", help="evaluate a ref,dist,mos manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", help="also write per-record predictions CSV")
    p.add_argument("--fig", help="also render a score-vs-MOS figure (PNG)")
    _add_common(p, weights_required=True)
    p.set_defaults(handler=_cmd_eval)

    p = commands.add_parser("gen-gt", help="build the geometric-transform dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--translate", type=_translate_frac, default=0.05, help="shift fraction (default 0.05)")
    p.add_argument("--rotate", type=_rotate_deg, default=3.0, help="rotation degrees (default 3)")
    p.add_argument("--scale", type=_scale_factor, default=1.05, help="upscale factor (default 1.05)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(handler=_cmd_gen_gt)

    p = commands.add_parser("toy", help="Pearson vs distance correlation on synthetic data")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--eps", type=_nonneg_float, default=1e-6)
    p.add_argument("--fig", help="render the two-panel scatter (PNG)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(handler=_cmd_toy)

    p = commands.add_parser("export-distmat", help="dump one tap's centered distance matrices as CSV")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--layer", default="conv3_4", help="tap to export (default conv3_4)")
    p.add_argument("--out", required=True, help="output stem; writes <stem>_ref.csv and <stem>_dist.csv")
    p.add_argument("--fig", help="also render heatmaps (PNG)")
    _add_common(p, weights_required=True)
    p.set_defaults(handler=_cmd_export_distmat)

    p = commands.add_parser("make-test-weights", help="write a deterministic random-weight container")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=int, default=1, choices=(1, 4, 8), help="channel-width divisor")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(handler=_cmd_make_test_weights)

    return parser


def _cmd_score(args) -> int:
    weights = load_weights(args.weights)
    cfg = DcorConfig(epsilon=args.eps)
    score = deepdc_score(
        load_image(args.ref), load_image(args.dist), weights, short_side=args.short_side, cfg=cfg
    )
    doc = {
        "deepdc": score.value,
        "profile": {name: r2 for name, r2 in score.profile},
        "ref": args.ref,
        "dist": args.dist,
    }
    lines = [f"deepdc {score.value:.9f}"]
    lines += [f"  {name} r2={r2:.9f}" for name, r2 in score.profile]
    _emit(args, doc, lines)
    return 0


def _cmd_eval(args) -> int:
    weights = load_weights(args.weights)
    manifest = read_manifest(args.manifest)
    report = evaluate_manifest(
        manifest, weights, short_side=args.short_side, cfg=DcorConfig(epsilon=args.eps)
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(report.to_json())
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["ref", "dist", "mos", "deepdc"])
            for p in report.predictions:
                writer.writerow([p["ref"], p["dist"], repr(p["mos"]), repr(p["deepdc"])])
    if args.fig:
        from . import figures

        figures.save_eval_figure(report, args.fig)
    doc = {
        "srcc": report.srcc,
        "plcc": report.plcc,
        "records": len(report.predictions),
        "errors": len(report.errors),
        "out": args.out,
    }
    lines = [
        f"records {len(report.predictions)} (errors {len(report.errors)})",
        f"srcc {report.srcc:.6f}",
        f"plcc {report.plcc:.6f}",
        f"report {args.out}",
    ]
    _emit(args, doc, lines)
    return 0


def _cmd_gen_gt(args) -> int:
    manifest = read_manifest(args.manifest)
    cfg = GtConfig(
        translate_frac=args.translate, rotate_deg=args.rotate, scale_factor=args.scale, seed=args.seed
    )
    result = build_gt_dataset(manifest, cfg, args.out_dir)
    manifest_path = os.path.join(args.out_dir, "manifest.csv")
    doc = {"records": len(result.records), "out_dir": args.out_dir, "manifest": manifest_path}
    _emit(args, doc, [f"records {len(result.records)}", f"manifest {manifest_path}"])
    return 0


def _cmd_toy(args) -> int:
    result = run_toy(n=args.n, seed=args.seed, cfg=DcorConfig(epsilon=args.eps))
    if args.fig:
        from . import figures

        figures.save_toy_figure(result, args.fig)
    lines = []
    for key in ("linear", "quadratic"):
        stats = result.stats[key]
        lines.append(f"{key}: pearson {stats['pearson']:.6f}, dcorr {stats['dcorr']:.6f}")
    _emit(args, result.stats, lines)
    return 0


def _cmd_export_distmat(args) -> int:
    weights = load_weights(args.weights)
    cfg = DcorConfig(epsilon=args.eps)
    if args.layer not in weights.taps:
        raise UsageError(f"--layer {args.layer!r} is not a tap; available: {', '.join(weights.taps)}")
    px = preprocess(load_image(args.ref), args.short_side, weights)
    py = preprocess(load_image(args.dist), args.short_side, weights)
    if px.shape != py.shape:
        raise ShapeMismatch(
            f"images disagree after resizing (aspect ratios differ): {px.shape[1:]} vs {py.shape[1:]}"
        )
    stacks = (extract_features(weights, px), extract_features(weights, py))
    matrices = []
    samples = []
    for stack in stacks:
        tensor = dict(stack.taps)[args.layer]
        sample = tensor.reshape(tensor.shape[0], -1)
        samples.append(sample)
        matrices.append(double_center(pairwise_distances(sample)))
    ref_csv = f"{args.out}_ref.csv"
    dist_csv = f"{args.out}_dist.csv"
    np.savetxt(ref_csv, matrices[0], delimiter=",", fmt="%.9e")
    np.savetxt(dist_csv, matrices[1], delimiter=",", fmt="%.9e")
    if args.fig:
        from . import figures

        figures.save_distmat_figure(matrices[0], matrices[1], args.layer, args.fig)
    r_squared = sample_dcorr(samples[0], samples[1], cfg)
    doc = {"layer": args.layer, "r_squared": r_squared, "ref_csv": ref_csv, "dist_csv": dist_csv}
    lines = [f"{args.layer} r2={r_squared:.9f}", f"wrote {ref_csv}", f"wrote {dist_csv}"]
    _emit(args, doc, lines)
    return 0


def _cmd_make_test_weights(args) -> int:
    weights = generate_test_backbone(args.seed, args.scale)
    write_weights(weights, args.out)
    doc = {
        "out": args.out,
        "architecture": weights.architecture,
        "layers": len(weights.layers),
        "taps": list(weights.taps),
        "seed": args.seed,
        "scale": args.scale,
    }
    _emit(args, doc, [f"wrote {args.out} ({weights.architecture}, {len(weights.layers)} layers)"])
    return 0


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DeepdcError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
