"""Core domain types and elementary geometry shared by every other module.

Raster conventions: origin at the top-left corner, x grows rightward,
y grows downward. Boxes are inclusive pixel-index ranges on all four
edges, so a one-pixel box has area 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "ImageBuffer",
    "BinaryMask",
    "GrayMap",
    "BBox",
    "PointSet",
    "TextTag",
    "Sample",
    "CandidatePair",
    "PipelineParams",
    "box_area_fraction",
    "point_in_box",
    "mask_area_fraction",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageBuffer:
    """8-bit RGB raster, shape (H, W, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValueError(f"image must be uint8 of shape (H, W, 3), got {arr.shape} {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """Hard foreground mask, shape (H, W), boolean."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            uniq = np.unique(arr)
            if not np.all(np.isin(uniq, (0, 1))):
                raise ValueError("mask values must be 0 or 1")
            arr = arr.astype(bool)
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GrayMap:
    """Soft prediction map, shape (H, W), values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"gray map must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("gray map values must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned box with inclusive integer pixel coordinates."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"box coordinates must be non-negative: {self}")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError(f"box must satisfy x_min <= x_max and y_min <= y_max: {self}")

    def validate_for(self, width: int, height: int) -> None:
        if self.x_max >= width or self.y_max >= height:
            raise ValueError(f"box {self} exceeds image bounds {width}x{height}")

    @property
    def pixel_width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def pixel_height(self) -> int:
        return self.y_max - self.y_min + 1


@dataclass(frozen=True)
class PointSet:
    """Ordered foreground points, one per annotated object."""

    points: tuple

    def __init__(self, points):
        pts = tuple((int(x), int(y)) for x, y in points)
        if not pts:
            raise ValueError("point set must be non-empty")
        object.__setattr__(self, "points", pts)

    def validate_for(self, width: int, height: int) -> None:
        for x, y in self.points:
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"point ({x}, {y}) outside image bounds {width}x{height}")

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class TextTag:
    """Category name of the camouflaged object."""

    tag: str

    def __post_init__(self):
        if not self.tag.strip():
            raise ValueError("text tag must be non-empty")


@dataclass(frozen=True)
class Sample:
    """One dataset record: an image with its point and text prompts."""

    image_ref: str
    points: PointSet
    text: TextTag
    gt_ref: Optional[str] = None


@dataclass(frozen=True)
class CandidatePair:
    """The two candidate pseudo masks produced by phase 1."""

    point_mask: BinaryMask
    text_mask: BinaryMask

    def __post_init__(self):
        if self.point_mask.data.shape != self.text_mask.data.shape:
            raise ValueError("candidate masks must share dimensions")


@dataclass(frozen=True)
class PipelineParams:
    """All tunables, defaulting to the ablation-selected values."""

    alpha: float = 0.95  # box-coverage ceiling, fraction of image area
    beta: float = 0.20  # regeneration scale, fraction of image dimension
    delta: float = 0.80  # mask-erasure ceiling, fraction of image area
    sigma: float = 50.0  # blur std-dev in pixels
    prompt_template: str = "A {text}"

    def __post_init__(self):
        for name in ("alpha", "beta", "delta"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.prompt_template.count("{text}") != 1:
            raise ValueError("prompt template must contain exactly one {text} slot")


def box_area_fraction(box: BBox, width: int, height: int) -> float:
    """Fraction of the image area covered by `box` (inclusive-pixel area)."""
    box.validate_for(width, height)
    return (box.pixel_width * box.pixel_height) / (width * height)


def point_in_box(point, box: BBox) -> bool:
    """True iff the point lies inside the box, edges included."""
    x, y = point
    return box.x_min <= x <= box.x_max and box.y_min <= y <= box.y_max


def mask_area_fraction(mask: BinaryMask) -> float:
    """Foreground pixel count divided by total pixel count."""
    return float(np.count_nonzero(mask.data)) / mask.data.size
