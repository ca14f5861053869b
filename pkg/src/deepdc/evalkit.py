"""Dataset-manifest evaluation: SRCC, logistic-fitted PLCC, 2AFC, reports.

Manifests are UTF-8 CSV files with header ``ref,dist,mos``; image paths are
resolved relative to the manifest location. Evaluation scores every pair,
ranks the predictions against MOS (Spearman with average ranks), fits the
five-parameter logistic

    mos_hat = eta1 * (1/2 - 1 / (1 + exp(eta2 * (D - eta3)))) + eta4 * D + eta5

by derivative-free least squares, and reports the Pearson correlation of the
mapped predictions (PLCC). Reports serialize to canonical JSON so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import rankdata

from .backbone import BackboneWeights, load_image
from .dcor_core import DcorConfig, pearson_corr
from .errors import (
    ConstantInput,
    DeepdcError,
    FitFailed,
    InsufficientData,
    ManifestError,
    NonFiniteInput,
)
from .metric import deepdc_score


@dataclass(frozen=True)
class ManifestRecord:
    ref: str
    dist: str
    mos: float


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ManifestRecord, ...]
    base_dir: str

    def resolve(self, relpath: str) -> str:
        return os.path.join(self.base_dir, relpath)


@dataclass(frozen=True)
class LogisticParams:
    eta1: float
    eta2: float
    eta3: float
    eta4: float
    eta5: float
    converged: bool = True

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.eta1, self.eta2, self.eta3, self.eta4, self.eta5)


@dataclass(frozen=True)
class EvalReport:
    srcc: float
    plcc: float
    params: LogisticParams
    predictions: tuple[dict, ...]
    errors: tuple[dict, ...]

    def to_json(self) -> str:
        doc = {
            "srcc": self.srcc,
            "plcc": self.plcc,
            "logistic": {
                "eta1": self.params.eta1,
                "eta2": self.params.eta2,
                "eta3": self.params.eta3,
                "eta4": self.params.eta4,
                "eta5": self.params.eta5,
                "converged": self.params.converged,
            },
            "predictions": list(self.predictions),
            "errors": list(self.errors),
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# manifest IO


def read_manifest(path) -> DatasetManifest:
    """Parse a ``ref,dist,mos`` CSV; paths stay relative to the file."""
    path = os.fspath(path)
    records = []
    with open(path, newline="", encoding="utf-8-sig") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty file, expected header 'ref,dist,mos'") from None
        if [h.strip() for h in header] != ["ref", "dist", "mos"]:
            raise ManifestError(f"{path}: bad header {header!r}, expected ref,dist,mos")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ManifestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                mos = float(row[2])
            except ValueError:
                raise ManifestError(f"{path}:{lineno}: MOS {row[2]!r} is not a number") from None
            if not math.isfinite(mos):
                raise ManifestError(f"{path}:{lineno}: MOS must be finite")
            records.append(ManifestRecord(row[0].strip(), row[1].strip(), mos))
    return DatasetManifest(tuple(records), os.path.dirname(os.path.abspath(path)))


def write_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["ref", "dist", "mos"])
        for rec in manifest.records:
            writer.writerow([rec.ref, rec.dist, repr(rec.mos)])


# ---------------------------------------------------------------------------
# correlation statistics


def srcc(pred, mos) -> float:
    """Spearman rank-order correlation with average ranks for ties."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    mos = np.asarray(mos, dtype=np.float64).ravel()
    return pearson_corr(rankdata(pred, method="average"), rankdata(mos, method="average"))


def _logistic_curve(params, x: np.ndarray) -> np.ndarray:
    eta1, eta2, eta3, eta4, eta5 = params
    z = np.clip(eta2 * (x - eta3), -500.0, 500.0)
    return eta1 * (0.5 - 1.0 / (1.0 + np.exp(z))) + eta4 * x + eta5


def fit_logistic(pred, mos) -> LogisticParams:
    """Least-squares fit of the five-parameter logistic mapping.

    Nelder-Mead from a documented start (eta3 = median, eta1 = MOS range,
    eta2 = 1/std with both signs tried, eta4 = 0, eta5 = MOS mean), 10000
    iterations, tolerance 1e-10, with one restart from the best vertex.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    mos = np.asarray(mos, dtype=np.float64).ravel()
    if pred.shape != mos.shape:
        raise FitFailed(f"series lengths differ: {pred.shape} vs {mos.shape}")
    if pred.size < 5:
        raise InsufficientData(f"logistic fit needs at least 5 points, got {pred.size}")
    if not (np.isfinite(pred).all() and np.isfinite(mos).all()):
        raise NonFiniteInput("fit inputs contain NaN or infinity")
    spread = float(pred.std())
    if spread == 0.0:
        raise FitFailed("predictions are constant, logistic fit undefined")

    def loss(p):
        residual = _logistic_curve(p, pred) - mos
        return float(residual @ residual) / pred.size

    options = {"maxiter": 10000, "maxfev": 10000, "fatol": 1e-10, "xatol": 1e-10}
    eta1 = float(mos.max() - mos.min())
    eta3 = float(np.median(pred))
    eta5 = float(mos.mean())
    best = None
    for sign in (1.0, -1.0):
        start = np.array([eta1, sign / spread, eta3, 0.0, eta5])
        result = minimize(loss, start, method="Nelder-Mead", options=options)
        if best is None or result.fun < best.fun:
            best = result
    # a restart re-expands the collapsed simplex and escapes premature stalls
    final = minimize(loss, best.x, method="Nelder-Mead", options=options)
    if final.fun > best.fun:
        final = best
    if not np.isfinite(final.x).all() or not np.isfinite(final.fun):
        raise FitFailed("optimizer diverged to non-finite parameters")
    p = final.x
    return LogisticParams(float(p[0]), float(p[1]), float(p[2]), float(p[3]), float(p[4]), bool(final.success))


def plcc_fitted(pred, mos) -> tuple[float, LogisticParams]:
    """Pearson correlation after the logistic mapping.

    Falls back to the raw linear PLCC (identity parameters, converged=False)
    when the fit is impossible or produces a constant mapping.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    mos = np.asarray(mos, dtype=np.float64).ravel()
    try:
        params = fit_logistic(pred, mos)
        mapped = _logistic_curve(params.as_tuple(), pred)
        return pearson_corr(mapped, mos), params
    except (FitFailed, InsufficientData, ConstantInput):
        fallback = LogisticParams(0.0, 1.0, 0.0, 1.0, 0.0, converged=False)
        return pearson_corr(pred, mos), fallback


def twoafc_score(d_a: float, d_b: float, human_pref_a: float) -> float:
    """Agreement with human preference in a two-alternative forced choice.

    The model prefers the candidate with the lower distance; the score is the
    fraction of humans who agree with that preference, 0.5 on an exact tie.
    """
    if not (math.isfinite(d_a) and math.isfinite(d_b) and math.isfinite(human_pref_a)):
        raise NonFiniteInput("2AFC inputs must be finite")
    if d_a < d_b:
        return float(human_pref_a)
    if d_a > d_b:
        return float(1.0 - human_pref_a)
    return 0.5


# ---------------------------------------------------------------------------
# end-to-end protocol


def evaluate_manifest(
    manifest: DatasetManifest,
    weights: BackboneWeights,
    short_side: int = 224,
    cfg: DcorConfig = DcorConfig(),
) -> EvalReport:
    """Score every manifest pair and correlate against MOS.

    Per-record decode or scoring failures are collected in the report rather
    than aborting the run; at least 2 scored records are required for the
    correlations. The reported SRCC uses the quality orientation (negated
    distance against MOS), so a metric that correctly ranks worse images
    higher scores +1; the logistic mapping handles orientation for PLCC via
    the sign of eta2.
    """
    predictions = []
    errors = []
    for rec in manifest.records:
        try:
            ref_img = load_image(manifest.resolve(rec.ref))
            dist_img = load_image(manifest.resolve(rec.dist))
            score = deepdc_score(ref_img, dist_img, weights, short_side=short_side, cfg=cfg)
        except (DeepdcError, OSError, ValueError) as exc:
            errors.append({"ref": rec.ref, "dist": rec.dist, "error": f"{type(exc).__name__}: {exc}"})
            continue
        predictions.append({"ref": rec.ref, "dist": rec.dist, "mos": rec.mos, "deepdc": score.value})
    if len(predictions) < 2:
        raise InsufficientData(f"need at least 2 scored records for correlations, got {len(predictions)}")
    d = np.array([p["deepdc"] for p in predictions])
    mos = np.array([p["mos"] for p in predictions])
    srcc_value = srcc(-d, mos)
    plcc_value, params = plcc_fitted(d, mos)
    return EvalReport(srcc_value, plcc_value, params, tuple(predictions), tuple(errors))
