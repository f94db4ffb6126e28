"""camolabel: deterministic pseudo-label generation, selection, and
evaluation for weakly-supervised camouflaged object detection."""

from .core import (
    BBox,
    BinaryMask,
    CandidatePair,
    GrayMap,
    ImageBuffer,
    PipelineParams,
    PointSet,
    Sample,
    TextTag,
    box_area_fraction,
    mask_area_fraction,
    point_in_box,
)
from .pcg import generate_candidates, mask_erasure, rectify_boxes, regenerate_box
from .qcd import SelectionRecord, choose_mask, cosine_similarity, reverse_blur_prompt

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BinaryMask",
    "CandidatePair",
    "GrayMap",
    "ImageBuffer",
    "PipelineParams",
    "PointSet",
    "Sample",
    "TextTag",
    "box_area_fraction",
    "mask_area_fraction",
    "point_in_box",
    "generate_candidates",
    "mask_erasure",
    "rectify_boxes",
    "regenerate_box",
    "SelectionRecord",
    "choose_mask",
    "cosine_similarity",
    "reverse_blur_prompt",
    "__version__",
]
