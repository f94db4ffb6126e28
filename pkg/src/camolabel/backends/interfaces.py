"""Abstract model interfaces consumed by the generation pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Protocol, runtime_checkable

from ..core import BBox, BinaryMask, ImageBuffer


class BackendError(RuntimeError):
    """A model backend failed to produce a usable result."""


@dataclass(frozen=True)
class DetectedBox:
    """A detector hit: box plus model confidence."""

    box: BBox
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@runtime_checkable
class PointSegmenter(Protocol):
    def segment_point(self, image: ImageBuffer, point) -> BinaryMask: ...


@runtime_checkable
class BoxSegmenter(Protocol):
    def segment_box(self, image: ImageBuffer, box: BBox) -> BinaryMask: ...


@runtime_checkable
class TextBoxDetector(Protocol):
    def detect(self, image: ImageBuffer, text: str) -> List[DetectedBox]: ...


@runtime_checkable
class ImageTextScorer(Protocol):
    def score(self, image: ImageBuffer, text: str) -> float: ...


@dataclass(frozen=True)
class Backends:
    """The four model dependencies bundled for the pipeline."""

    point_segmenter: PointSegmenter
    box_segmenter: BoxSegmenter
    detector: TextBoxDetector
    scorer: ImageTextScorer
