"""Evaluation metrics: S-measure, MAE, adaptive E-measure, adaptive and
maximum F-measure, weighted F-measure, plus PR curves and dataset
aggregation.

Frozen conventions (guarded by golden tests):
  - F-measure uses beta^2 = 0.3; weighted F-measure uses beta = 1 as in
    its original formulation.
  - Adaptive binarization threshold = min(2 * mean(pred), 1), applied as
    pred >= threshold.
  - Threshold sweeps use the 256 levels t/255, t = 0..255, applied as
    pred >= t/255.
  - Weighted F-measure: 7x7 Gaussian window with sigma 5, zero padding;
    dependency decay exp(log(0.5)/5 * distance); nearest-foreground
    assignment breaks exact distance ties toward the smallest
    column-major index.
  - Degenerate (all-zero) ground truth: S-measure and E-measure use
    their published degenerate branches; F-based metrics are reported
    as skipped, never fabricated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .core import BinaryMask, GrayMap

__all__ = [
    "PRCurve",
    "FMeasureResult",
    "ImageMetrics",
    "MetricReport",
    "mae",
    "s_measure",
    "e_measure_adaptive",
    "f_measures",
    "weighted_f_measure",
    "compute_image_metrics",
    "evaluate_dataset",
    "METRIC_COLUMNS",
]

EPS = float(np.finfo(np.float64).eps)
F_BETA_SQ = 0.3
WFM_SIGMA = 5.0
WFM_WINDOW = 7
N_THRESHOLDS = 256

# Table-header order used by all report files.
METRIC_COLUMNS = (
    "s_measure",
    "mae",
    "e_measure_adaptive",
    "f_measure_adaptive",
    "f_measure_max",
    "f_measure_weighted",
)


def _check_dims(pred: GrayMap, gt: BinaryMask) -> None:
    if pred.data.shape != gt.data.shape:
        raise ValueError(
            f"prediction {pred.data.shape} and ground truth {gt.data.shape} dimensions differ"
        )


def adaptive_threshold(pred: GrayMap) -> float:
    return min(2.0 * float(pred.data.mean()), 1.0)


@dataclass(frozen=True)
class PRCurve:
    """Per-threshold confusion counts and the derived (P, R) pairs."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def __post_init__(self):
        for arr in (self.tp, self.fp, self.fn):
            if arr.shape != (N_THRESHOLDS,):
                raise ValueError("PR curve arrays must have length 256")

    @property
    def precision(self) -> np.ndarray:
        denom = self.tp + self.fp
        return np.where(denom > 0, self.tp / np.maximum(denom, 1), 0.0)

    @property
    def recall(self) -> np.ndarray:
        denom = self.tp + self.fn
        return np.where(denom > 0, self.tp / np.maximum(denom, 1), 0.0)

    def __add__(self, other: "PRCurve") -> "PRCurve":
        return PRCurve(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class FMeasureResult:
    adaptive: Optional[float]
    maximum: Optional[float]
    curve: Optional[PRCurve]
    skipped: bool = False


def mae(pred: GrayMap, gt: BinaryMask) -> float:
    """Mean absolute difference between prediction and ground truth."""
    _check_dims(pred, gt)
    return float(np.abs(pred.data - gt.data.astype(np.float64)).mean())


def _object_score(values: np.ndarray) -> float:
    x = float(values.mean())
    sigma_x = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma_x + EPS)


def _ssim_block(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    if n == 0:
        return 0.0
    x = float(pred.mean())
    y = float(gt.mean())
    sigma_x2 = float(((pred - x) ** 2).sum() / (n - 1 + EPS))
    sigma_y2 = float(((gt - y) ** 2).sum() / (n - 1 + EPS))
    sigma_xy = float(((pred - x) * (gt - y)).sum() / (n - 1 + EPS))
    a = 4.0 * x * y * sigma_xy
    b = (x * x + y * y) * (sigma_x2 + sigma_y2)
    if a != 0.0:
        return a / (b + EPS)
    return 1.0 if b == 0.0 else 0.0


def _centroid(gt: np.ndarray) -> Tuple[int, int]:
    # 1-based centroid rounded half away from zero, matching the
    # published formulation.
    h, w = gt.shape
    area = gt.sum()
    if area == 0:
        return int(np.floor(w / 2 + 0.5)), int(np.floor(h / 2 + 0.5))
    cols = np.arange(1, w + 1, dtype=np.float64)
    rows = np.arange(1, h + 1, dtype=np.float64)
    cx = int(np.floor((gt.sum(axis=0) * cols).sum() / area + 0.5))
    cy = int(np.floor((gt.sum(axis=1) * rows).sum() / area + 0.5))
    return cx, cy


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    cx, cy = _centroid(gt)
    total = h * w
    w1 = (cx * cy) / total
    w2 = ((w - cx) * cy) / total
    w3 = (cx * (h - cy)) / total
    w4 = 1.0 - w1 - w2 - w3
    blocks = (
        (pred[:cy, :cx], gt[:cy, :cx], w1),
        (pred[:cy, cx:], gt[:cy, cx:], w2),
        (pred[cy:, :cx], gt[cy:, :cx], w3),
        (pred[cy:, cx:], gt[cy:, cx:], w4),
    )
    return sum(weight * _ssim_block(p, g) for p, g, weight in blocks)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    mu = float(gt.mean())
    fg = _object_score(pred[gt > 0.5])
    bg = _object_score(1.0 - pred[gt <= 0.5])
    return mu * fg + (1.0 - mu) * bg


def s_measure(pred: GrayMap, gt: BinaryMask, alpha: float = 0.5) -> float:
    """Structure measure: alpha-weighted object and region similarity."""
    _check_dims(pred, gt)
    g = gt.data.astype(np.float64)
    p = pred.data
    y = float(g.mean())
    if y == 0.0:
        return 1.0 - float(p.mean())
    if y == 1.0:
        return float(p.mean())
    score = alpha * _s_object(p, g) + (1.0 - alpha) * _s_region(p, g)
    return max(score, 0.0)


def e_measure_adaptive(pred: GrayMap, gt: BinaryMask) -> float:
    """Enhanced-alignment measure at the adaptive binarization threshold."""
    _check_dims(pred, gt)
    g = gt.data.astype(np.float64)
    fm = (pred.data >= adaptive_threshold(pred)).astype(np.float64)
    if g.sum() == 0:
        enhanced = 1.0 - fm
    elif (1.0 - g).sum() == 0:
        enhanced = fm
    else:
        dfm = fm - fm.mean()
        dgt = g - g.mean()
        align = 2.0 * dgt * dfm / (dgt * dgt + dfm * dfm + EPS)
        enhanced = (align + 1.0) ** 2 / 4.0
    return float(enhanced.sum() / g.size)


def _threshold_counts(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Binarization pred >= t/255 is equivalent to floor(pred*255) >= t
    # for integer t, so one histogram pass covers all 256 thresholds.
    level = np.clip(np.floor(pred * 255.0).astype(np.int64), 0, 255)
    fg_hist = np.bincount(level[gt], minlength=N_THRESHOLDS)
    bg_hist = np.bincount(level[~gt], minlength=N_THRESHOLDS)
    tp = np.cumsum(fg_hist[::-1])[::-1]
    fp = np.cumsum(bg_hist[::-1])[::-1]
    fn = np.count_nonzero(gt) - tp
    return tp, fp, fn


def _f_beta(precision: float, recall: float) -> float:
    denom = F_BETA_SQ * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + F_BETA_SQ) * precision * recall / denom


def f_measures(pred: GrayMap, gt: BinaryMask) -> FMeasureResult:
    """Adaptive F, maximum F over 256 thresholds, and the PR curve.

    Undefined (skipped) when the ground truth has no foreground pixel.
    """
    _check_dims(pred, gt)
    g = gt.data
    n_fg = int(np.count_nonzero(g))
    if n_fg == 0:
        return FMeasureResult(adaptive=None, maximum=None, curve=None, skipped=True)
    tp, fp, fn = _threshold_counts(pred.data, g)
    curve = PRCurve(tp.astype(np.int64), fp.astype(np.int64), fn.astype(np.int64))
    f_max = 0.0
    for p, r in zip(curve.precision, curve.recall):
        f_max = max(f_max, _f_beta(float(p), float(r)))
    binary = pred.data >= adaptive_threshold(pred)
    tp_a = int(np.count_nonzero(binary & g))
    fp_a = int(np.count_nonzero(binary & ~g))
    precision = tp_a / (tp_a + fp_a) if tp_a + fp_a > 0 else 0.0
    recall = tp_a / n_fg
    return FMeasureResult(adaptive=_f_beta(precision, recall), maximum=f_max, curve=curve)


def _matlab_gaussian(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    y, x = np.mgrid[-half : half + 1, -half : half + 1]
    k = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return k / k.sum()


def weighted_f_measure(pred: GrayMap, gt: BinaryMask) -> Optional[float]:
    """Distance-weighted F-measure; None (skipped) for all-zero ground truth."""
    _check_dims(pred, gt)
    g = gt.data
    if not g.any():
        return None
    gf = g.astype(np.float64)
    err = np.abs(pred.data - gf)
    err_t = err.copy()
    dist = np.zeros_like(err)
    bg = ~g
    if bg.any():
        dist, (iy, ix) = ndimage.distance_transform_edt(bg, return_indices=True)
        err_t[bg] = err[iy[bg], ix[bg]]
    kernel = _matlab_gaussian(WFM_WINDOW, WFM_SIGMA)
    ea = ndimage.correlate(err_t, kernel, mode="constant", cval=0.0)
    min_e_ea = err.copy()
    swap = g & (ea < err)
    min_e_ea[swap] = ea[swap]
    weight = np.ones_like(err)
    weight[bg] = 2.0 - np.exp(np.log(0.5) / 5.0 * dist[bg])
    ew = min_e_ea * weight
    tp_w = gf.sum() - ew[g].sum()
    fp_w = ew[bg].sum()
    recall = 1.0 - float(ew[g].mean())
    precision = tp_w / (EPS + tp_w + fp_w)
    return float(2.0 * recall * precision / (EPS + recall + precision))


@dataclass(frozen=True)
class ImageMetrics:
    """The six scores for one (prediction, ground truth) pair."""

    s_measure: float
    mae: float
    e_measure_adaptive: float
    f_measure_adaptive: Optional[float]
    f_measure_max: Optional[float]
    f_measure_weighted: Optional[float]
    f_skipped: bool
    name: Optional[str] = None

    def as_row(self) -> dict:
        return {col: getattr(self, col) for col in METRIC_COLUMNS}


@dataclass(frozen=True)
class MetricReport:
    """Per-image metrics plus arithmetic-mean aggregation."""

    per_image: List[ImageMetrics]
    means: dict
    n_images: int
    n_f_skipped: int


def compute_image_metrics(
    pred: GrayMap, gt: BinaryMask, name: Optional[str] = None
) -> Tuple[ImageMetrics, Optional[PRCurve]]:
    fm = f_measures(pred, gt)
    metrics = ImageMetrics(
        s_measure=s_measure(pred, gt),
        mae=mae(pred, gt),
        e_measure_adaptive=e_measure_adaptive(pred, gt),
        f_measure_adaptive=fm.adaptive,
        f_measure_max=fm.maximum,
        f_measure_weighted=weighted_f_measure(pred, gt),
        f_skipped=fm.skipped,
        name=name,
    )
    return metrics, fm.curve


def evaluate_dataset(
    pairs: Sequence[Tuple[GrayMap, BinaryMask]],
    names: Optional[Sequence[str]] = None,
) -> Tuple[MetricReport, PRCurve]:
    """Per-image metrics, mean aggregation, and the dataset PR curve
    built from summed per-threshold counts."""
    if not pairs:
        raise ValueError("dataset must contain at least one (pred, gt) pair")
    if names is None:
        names = [str(i) for i in range(len(pairs))]
    per_image: List[ImageMetrics] = []
    total_curve = PRCurve(
        np.zeros(N_THRESHOLDS, dtype=np.int64),
        np.zeros(N_THRESHOLDS, dtype=np.int64),
        np.zeros(N_THRESHOLDS, dtype=np.int64),
    )
    for name, (pred, gt) in zip(names, pairs):
        try:
            metrics, curve = compute_image_metrics(pred, gt, name=name)
        except ValueError as exc:
            raise ValueError(f"pair {name!r}: {exc}") from exc
        per_image.append(metrics)
        if curve is not None:
            total_curve = total_curve + curve
    means = {}
    for col in METRIC_COLUMNS:
        values = [getattr(m, col) for m in per_image if getattr(m, col) is not None]
        means[col] = float(np.mean(values)) if values else None
    report = MetricReport(
        per_image=per_image,
        means=means,
        n_images=len(per_image),
        n_f_skipped=sum(1 for m in per_image if m.f_skipped),
    )
    return report, total_curve
