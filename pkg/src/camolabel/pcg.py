"""Phase 1 (SEGMENT): point-guided candidate generation.

Produces the two candidate pseudo masks per image: the point path
(promptable segmentation at each annotated point) and the text path
(text-grounded detection, corrected by the bounding box rectifier and
mask erasure).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .backends.interfaces import (
    Backends,
    BackendError,
    BoxSegmenter,
    DetectedBox,
    PointSegmenter,
    TextBoxDetector,
)
from .core import (
    BBox,
    BinaryMask,
    CandidatePair,
    ImageBuffer,
    PipelineParams,
    PointSet,
    Sample,
    box_area_fraction,
    mask_area_fraction,
    point_in_box,
)

__all__ = [
    "regenerate_box",
    "rectify_boxes",
    "segment_point_path",
    "mask_erasure",
    "segment_text_path",
    "generate_candidates",
    "TextPathTrace",
    "GenerationTrace",
]


@dataclass
class TextPathTrace:
    """Decisions taken along the text path, for per-sample logs."""

    detected_boxes: List[DetectedBox] = field(default_factory=list)
    rectified_boxes: List[BBox] = field(default_factory=list)
    erasure_triggered: bool = False


@dataclass
class GenerationTrace:
    text_path: TextPathTrace = field(default_factory=TextPathTrace)


def regenerate_box(point, width: int, height: int, beta: float) -> BBox:
    """Create a box of half-extent beta*W x beta*H centered on the point.

    The result is rounded to integer pixel coordinates and clamped to
    the image, so it always contains the point.
    """
    x, y = point
    if not (0 <= x < width and 0 <= y < height):
        raise ValueError(f"point ({x}, {y}) outside image bounds {width}x{height}")
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    half_w = beta * width
    half_h = beta * height
    return BBox(
        x_min=max(0, int(round(x - half_w))),
        y_min=max(0, int(round(y - half_h))),
        x_max=min(width - 1, int(round(x + half_w))),
        y_max=min(height - 1, int(round(y + half_h))),
    )


def rectify_boxes(
    detections: List[DetectedBox],
    points: PointSet,
    width: int,
    height: int,
    alpha: float,
    beta: float,
) -> List[BBox]:
    """Bounding box rectifier.

    Keeps detected boxes that do not exceed the area ceiling alpha and
    contain at least one annotated point; every point left uncovered
    afterwards gets a regenerated box. Survivors come first in input
    order, then regenerated boxes in point order.
    """
    survivors = [
        d.box
        for d in detections
        if box_area_fraction(d.box, width, height) <= alpha
        and any(point_in_box(p, d.box) for p in points)
    ]
    regenerated = [
        regenerate_box(p, width, height, beta)
        for p in points
        if not any(point_in_box(p, b) for b in survivors)
    ]
    return survivors + regenerated


def _empty_mask(width: int, height: int) -> np.ndarray:
    return np.zeros((height, width), dtype=bool)


def segment_point_path(
    image: ImageBuffer, points: PointSet, segmenter: PointSegmenter
) -> BinaryMask:
    """Segment each annotated point and OR-merge the per-point masks."""
    merged = _empty_mask(image.width, image.height)
    for i, point in enumerate(points):
        try:
            mask = segmenter.segment_point(image, point)
        except Exception as exc:
            raise BackendError(f"point segmentation failed for point {i} {point}: {exc}") from exc
        merged |= mask.data
    return BinaryMask(merged)


def mask_erasure(
    mask: BinaryMask,
    image: ImageBuffer,
    points: PointSet,
    delta: float,
    beta: float,
    segmenter: BoxSegmenter,
    trace: Optional[TextPathTrace] = None,
) -> BinaryMask:
    """Reject a near-full-image text mask and re-segment from point boxes.

    If the mask's foreground area fraction reaches delta, boxes are
    regenerated around every annotated point and re-segmented; the
    OR-merged result is accepted as-is (single pass, no second erasure).
    Otherwise the mask is returned unchanged.
    """
    if mask.data.shape != (image.height, image.width):
        raise ValueError("mask dimensions must match the image")
    if mask_area_fraction(mask) < delta:
        return mask
    if trace is not None:
        trace.erasure_triggered = True
    merged = _empty_mask(image.width, image.height)
    for point in points:
        box = regenerate_box(point, image.width, image.height, beta)
        merged |= segmenter.segment_box(image, box).data
    return BinaryMask(merged)


def segment_text_path(
    image: ImageBuffer,
    sample: Sample,
    detector: TextBoxDetector,
    segmenter: BoxSegmenter,
    params: PipelineParams,
    trace: Optional[TextPathTrace] = None,
) -> BinaryMask:
    """Run the full text path: detect, rectify, segment, erase."""
    detections = detector.detect(image, sample.text.tag)
    boxes = rectify_boxes(
        detections, sample.points, image.width, image.height, params.alpha, params.beta
    )
    if trace is not None:
        trace.detected_boxes = list(detections)
        trace.rectified_boxes = list(boxes)
    merged = _empty_mask(image.width, image.height)
    for box in boxes:
        merged |= segmenter.segment_box(image, box).data
    return mask_erasure(
        BinaryMask(merged), image, sample.points, params.delta, params.beta, segmenter, trace
    )


def generate_candidates(
    sample: Sample,
    backends: Backends,
    params: PipelineParams,
    image: Optional[ImageBuffer] = None,
) -> tuple[CandidatePair, GenerationTrace]:
    """Produce the candidate pair for one sample.

    Deterministic given deterministic backends. A failure in either
    path aborts the sample with a diagnostic naming the failed path.
    """
    if image is None:
        from . import imgio

        image = imgio.load_image(sample.image_ref)
    sample.points.validate_for(image.width, image.height)
    trace = GenerationTrace()
    try:
        point_mask = segment_point_path(image, sample.points, backends.point_segmenter)
    except Exception as exc:
        raise BackendError(f"point path failed for sample {sample.image_ref}: {exc}") from exc
    try:
        text_mask = segment_text_path(
            image, sample, backends.detector, backends.box_segmenter, params, trace.text_path
        )
    except Exception as exc:
        raise BackendError(f"text path failed for sample {sample.image_ref}: {exc}") from exc
    return CandidatePair(point_mask=point_mask, text_mask=text_mask), trace
