"""Supervision losses with analytic gradients w.r.t. the prediction map.

BCE is an unnormalized pixel sum while PBCE is normalized by the
annotated-set size; the two therefore live on different scales, and the
total simply adds them unweighted. Predictions are clamped to
[CLAMP_EPS, 1 - CLAMP_EPS] before any log or division; the clamp level
sits below 8-bit quantization, so it never masks real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinaryMask, GrayMap

__all__ = [
    "CLAMP_EPS",
    "AnnotatedSet",
    "LossValue",
    "bce_loss",
    "pbce_loss",
    "iou_loss",
    "total_loss",
]

CLAMP_EPS = 1e-7


@dataclass(frozen=True)
class AnnotatedSet:
    """Sparse supervision: flat pixel indices with binary labels."""

    indices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        lab = np.asarray(self.labels, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != lab.shape:
            raise ValueError("indices and labels must be 1-D and equal length")
        if idx.size == 0:
            raise ValueError("annotated set must contain at least one pixel")
        if len(np.unique(idx)) != idx.size:
            raise ValueError("annotated indices must be unique")
        if not np.all(np.isin(lab, (0.0, 1.0))):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def dense(cls, gt: BinaryMask) -> "AnnotatedSet":
        """All pixels annotated; the default when training on dense pseudo masks."""
        return cls(np.arange(gt.data.size), gt.data.ravel().astype(np.float64))

    def validate_for(self, size: int) -> None:
        if self.indices.min() < 0 or self.indices.max() >= size:
            raise ValueError("annotated indices out of bounds")


@dataclass(frozen=True)
class LossValue:
    bce: float
    pbce: float
    iou: float

    @property
    def total(self) -> float:
        return self.bce + self.pbce + self.iou


def _check_dims(pred: GrayMap, gt: BinaryMask) -> None:
    if pred.data.shape != gt.data.shape:
        raise ValueError(
            f"prediction {pred.data.shape} and ground truth {gt.data.shape} dimensions differ"
        )


def _clamped(pred: np.ndarray) -> np.ndarray:
    return np.clip(pred, CLAMP_EPS, 1.0 - CLAMP_EPS)


def bce_loss(pred: GrayMap, gt: BinaryMask) -> tuple[float, np.ndarray]:
    """Pixel-summed binary cross entropy and its gradient map."""
    _check_dims(pred, gt)
    g = gt.data.astype(np.float64)
    p = _clamped(pred.data)
    value = -np.sum(g * np.log(p) + (1.0 - g) * np.log(1.0 - p))
    grad = -(g / p - (1.0 - g) / (1.0 - p))
    return float(value), grad


def pbce_loss(pred: GrayMap, annotated: AnnotatedSet) -> tuple[float, np.ndarray]:
    """Partial BCE, averaged over the annotated pixel set; the gradient
    is nonzero only on annotated pixels."""
    annotated.validate_for(pred.data.size)
    p_flat = _clamped(pred.data.ravel())
    p = p_flat[annotated.indices]
    g = annotated.labels
    n = annotated.indices.size
    value = -np.sum(g * np.log(p) + (1.0 - g) * np.log(1.0 - p)) / n
    grad = np.zeros(pred.data.size, dtype=np.float64)
    grad[annotated.indices] = -(g / p - (1.0 - g) / (1.0 - p)) / n
    return float(value), grad.reshape(pred.data.shape)


def iou_loss(pred: GrayMap, gt: BinaryMask) -> tuple[float, np.ndarray]:
    """Differentiable IoU loss 1 - intersection/union, with the gradient
    from the quotient rule."""
    _check_dims(pred, gt)
    g = gt.data.astype(np.float64)
    p = pred.data
    inter = np.sum(p * g)
    union = np.sum(p + g - p * g)
    union_safe = union + CLAMP_EPS
    value = 1.0 - inter / union_safe
    # d inter / dp = g ; d union / dp = 1 - g
    grad = -(g * union_safe - inter * (1.0 - g)) / (union_safe * union_safe)
    return float(value), grad


def total_loss(pred: GrayMap, gt: BinaryMask, annotated: AnnotatedSet) -> tuple[LossValue, np.ndarray]:
    """Componentwise loss values and the summed gradient map."""
    bce, g_bce = bce_loss(pred, gt)
    pbce, g_pbce = pbce_loss(pred, annotated)
    iou, g_iou = iou_loss(pred, gt)
    return LossValue(bce=bce, pbce=pbce, iou=iou), g_bce + g_pbce + g_iou
