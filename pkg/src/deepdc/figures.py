"""Figure rendering for the CLI report paths (file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evalkit import EvalReport, _logistic_curve
from .toy import ToyResult


def save_eval_figure(report: EvalReport, path) -> None:
    """Scatter of score vs MOS with the fitted logistic overlaid."""
    d = np.array([p["deepdc"] for p in report.predictions])
    mos = np.array([p["mos"] for p in report.predictions])
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.scatter(d, mos, s=18, alpha=0.7, edgecolors="none", label="image pairs")
    grid = np.linspace(d.min(), d.max(), 256)
    ax.plot(grid, _logistic_curve(report.params.as_tuple(), grid), "r-", lw=1.5, label="fitted logistic")
    ax.set_xlabel("DeepDC score")
    ax.set_ylabel("MOS")
    ax.set_title(f"SRCC {report.srcc:.4f}, PLCC {report.plcc:.4f}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_toy_figure(result: ToyResult, path) -> None:
    """Two panels: linear and quadratic response with both statistics."""
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.6))
    panels = (
        ("linear", result.y_linear),
        ("quadratic", result.y_quadratic),
    )
    for ax, (key, y) in zip(axes, panels):
        stats = result.stats[key]
        ax.scatter(result.x, y, s=6, alpha=0.5, edgecolors="none")
        ax.set_title(f"{key}: pearson {stats['pearson']:.3f}, dcorr {stats['dcorr']:.3f}", fontsize=9)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_distmat_figure(centered_ref: np.ndarray, centered_dist: np.ndarray, layer: str, path) -> None:
    """Side-by-side heatmaps of the two double-centered distance matrices."""
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.8))
    for ax, (title, matrix) in zip(
        axes, (("reference", centered_ref), ("distorted", centered_dist))
    ):
        im = ax.imshow(matrix, cmap="viridis")
        ax.set_title(f"{title} ({layer})", fontsize=9)
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
