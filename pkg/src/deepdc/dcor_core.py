"""Sample distance covariance/correlation kernels and their gradients.

Observations are the rows of a real matrix; any two samples with the same
number of rows can be compared, whatever their column counts. The statistics
follow the classical biased estimators built from double-centered Euclidean
distance matrices:

    a_kl = ||x_k - x_l||_2
    A_kl = a_kl - rowmean_k - colmean_l + grandmean
    dcov2(X, Y)  = (1 / n^2) * sum_kl A_kl * B_kl
    dcorr2(X, Y) = (dcov2(X, Y) + eps) / (sqrt(dcov2(X) * dcov2(Y)) + eps)

with a small stabilizer ``eps`` shared by numerator and denominator. All
accumulation happens in float64 regardless of the input dtype.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantInput, DegenerateSample, NonFiniteInput, ShapeMismatch

#: off-diagonal distances below this make the statistic non-differentiable
GRAD_DEGENERACY_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DcorConfig:
    """Numerical configuration for the distance-correlation ratio.

    ``epsilon`` stabilizes the ratio against zero denominators; with
    ``epsilon > 0`` two zero-variance samples get correlation 1 (both terms
    reduce to eps/eps), not the 0 of the classical zero-denominator
    convention. ``norm_exponent`` is fixed at 2 (Euclidean distances).
    """

    epsilon: float = 1e-6
    norm_exponent: int = 2

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.norm_exponent != 2:
            raise ValueError("only the Euclidean norm (norm_exponent=2) is supported")


def _as_sample_matrix(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ShapeMismatch(f"{name} must be a non-empty 2-d observation matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise NonFiniteInput(f"{name} contains NaN or infinity")
    return x


def pairwise_distances(s) -> np.ndarray:
    """Euclidean distance matrix between the rows of ``s``.

    Uses the expansion ``||u - v||^2 = ||u||^2 + ||v||^2 - 2 u.v`` so the cost
    is one dense matrix product; squared distances are clamped at 0 before the
    square root to kill negative round-off, and the diagonal is set to 0
    exactly.
    """
    s = _as_sample_matrix(s, "s")
    sq = np.einsum("ij,ij->i", s, s)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (s @ s.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return d


def double_center(a) -> np.ndarray:
    """Remove row means, column means, and add back the grand mean.

    The result has (numerically) vanishing row and column sums, which is what
    makes the inner product of two such matrices a covariance-like quantity.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"distance matrix must be square, got shape {a.shape}")
    row = a.mean(axis=1, keepdims=True)
    col = a.mean(axis=0, keepdims=True)
    grand = a.mean()
    return a - row - col + grand


def sample_dcov(ac, bc) -> float:
    """Inner product ``(1/n^2) sum A_kl B_kl`` of two double-centered matrices."""
    ac = np.asarray(ac, dtype=np.float64)
    bc = np.asarray(bc, dtype=np.float64)
    if ac.shape != bc.shape or ac.ndim != 2 or ac.shape[0] != ac.shape[1]:
        raise ShapeMismatch(f"centered matrices must be square and equal-sized, got {ac.shape} vs {bc.shape}")
    n = ac.shape[0]
    return float(np.multiply(ac, bc).sum() / (n * n))


def sample_dvar(ac) -> float:
    """Distance variance ``(1/n^2) sum A_kl^2``; equals sample_dcov(ac, ac)."""
    return sample_dcov(ac, ac)


def _dcorr_from_moments(vxy: float, vx: float, vy: float, epsilon: float) -> float:
    denom = math.sqrt(max(vx, 0.0) * max(vy, 0.0)) + epsilon
    if denom == 0.0:
        # only reachable with epsilon == 0; classical zero-variance convention
        return 0.0
    r2 = (vxy + epsilon) / denom
    # Cauchy-Schwarz bounds the exact ratio by 1; clip float round-off so the
    # downstream quality score stays inside [0, 1].
    return min(max(r2, 0.0), 1.0)


def sample_dcorr(x, y, cfg: DcorConfig = DcorConfig()) -> float:
    """Squared sample distance correlation between two observation matrices.

    Rows are observations; ``x`` and ``y`` must have the same row count but
    may differ in width. The value lies in [0, 1]: 1 for identical (or affine
    related) samples, near 0 for independent ones as n grows.
    """
    x = _as_sample_matrix(x, "x")
    y = _as_sample_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"observation counts differ: {x.shape[0]} vs {y.shape[0]}")
    ac = double_center(pairwise_distances(x))
    bc = double_center(pairwise_distances(y))
    return _dcorr_from_moments(sample_dcov(ac, bc), sample_dvar(ac), sample_dvar(bc), cfg.epsilon)


def sample_dcorr_naive(x, y, cfg: DcorConfig = DcorConfig()) -> float:
    """Brute-force reference for :func:`sample_dcorr`.

    Evaluates the same definition with explicit Python loops and no matrix
    identities; intended only as an independent oracle for testing.
    """
    x = _as_sample_matrix(x, "x")
    y = _as_sample_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"observation counts differ: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]

    def dist_matrix(m):
        d = [[0.0] * n for _ in range(n)]
        for k in range(n):
            for l in range(n):
                acc = 0.0
                for j in range(m.shape[1]):
                    diff = float(m[k, j]) - float(m[l, j])
                    acc += diff * diff
                d[k][l] = math.sqrt(acc)
        return d

    def center(d):
        rowm = [sum(d[k]) / n for k in range(n)]
        colm = [sum(d[k][l] for k in range(n)) / n for l in range(n)]
        grand = sum(rowm) / n
        return [[d[k][l] - rowm[k] - colm[l] + grand for l in range(n)] for k in range(n)]

    a = center(dist_matrix(x))
    b = center(dist_matrix(y))
    vxy = vx = vy = 0.0
    for k in range(n):
        for l in range(n):
            vxy += a[k][l] * b[k][l]
            vx += a[k][l] * a[k][l]
            vy += b[k][l] * b[k][l]
    return _dcorr_from_moments(vxy / (n * n), vx / (n * n), vy / (n * n), cfg.epsilon)


def grad_sample_dcorr(x, y, cfg: DcorConfig = DcorConfig()) -> np.ndarray:
    """Gradient of the (unclipped) distance-correlation ratio wrt ``y``.

    Requires all off-diagonal pairwise distances of both samples to be
    strictly positive, otherwise the square-root terms are not differentiable.
    For the gradient with respect to ``x``, call with the arguments swapped:
    the statistic is symmetric, so ``grad_sample_dcorr(y, x)`` is d/dx.
    """
    x = _as_sample_matrix(x, "x")
    y = _as_sample_matrix(y, "y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise ShapeMismatch(f"observation counts differ: {n} vs {y.shape[0]}")

    a = pairwise_distances(x)
    b = pairwise_distances(y)
    off = ~np.eye(n, dtype=bool)
    if n > 1 and (a[off].min() < GRAD_DEGENERACY_THRESHOLD or b[off].min() < GRAD_DEGENERACY_THRESHOLD):
        raise DegenerateSample("coincident observations: off-diagonal distance below threshold")

    ac = double_center(a)
    bc = double_center(b)
    vxy = sample_dcov(ac, bc)
    vx = sample_dvar(ac)
    vy = sample_dvar(bc)
    s = math.sqrt(vx * vy)
    if s == 0.0:
        raise DegenerateSample("zero distance variance: gradient undefined")

    numer = vxy + cfg.epsilon
    denom = s + cfg.epsilon
    # dR2/db_kl, using that double centering is self-adjoint: H M H = M for
    # already-centered M, so dV_xy/db = A/n^2 and dV_y/db = 2B/n^2.
    g = (ac / denom - (numer * vx / (s * denom * denom)) * bc) / (n * n)

    # chain through b_kl = ||y_k - y_l||: grad_m = 2 sum_l (g_ml / b_ml) (y_m - y_l)
    w = np.zeros_like(g)
    np.divide(g, b, out=w, where=off)
    return 2.0 * (w.sum(axis=1, keepdims=True) * y - w @ y)


def pearson_corr(x, y) -> float:
    """Product-moment correlation of two equal-length series."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size < 2:
        raise ShapeMismatch(f"need two equal-length series with n >= 2, got {x.shape} and {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise NonFiniteInput("series contain NaN or infinity")
    xc = x - x.mean()
    yc = y - y.mean()
    sxq = float(xc @ xc)
    syq = float(yc @ yc)
    if sxq == 0.0 or syq == 0.0:
        raise ConstantInput("correlation undefined for a constant series")
    # single square root keeps r at exactly +/-1 for identical rank vectors
    denom = math.sqrt(sxq * syq)
    if denom == 0.0 or math.isinf(denom):
        denom = math.sqrt(sxq) * math.sqrt(syq)
    r = float(xc @ yc) / denom
    return min(max(r, -1.0), 1.0)
