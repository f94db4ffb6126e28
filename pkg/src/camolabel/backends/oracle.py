"""Deterministic synthetic-scene oracle backends for testing.

A SyntheticScene places disk/rectangle objects on a noisy canvas. The
oracle backends answer segmentation, detection, and scoring queries
exactly from scene geometry, so the full pipeline can be verified
end-to-end without any model inference. The oracle scorer returns the
IoU between the sharp (unblurred) region of a prompted image and the
scene's camouflaged-object mask, preserving the monotonicity the
selection step relies on (better mask, higher similarity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core import BBox, BinaryMask, ImageBuffer
from .interfaces import Backends, DetectedBox

__all__ = ["SceneObject", "SyntheticScene", "FaultPlan", "OracleBackends", "oracle_backends", "random_scene"]

DETECT_CONFIDENCE = 0.9


@dataclass(frozen=True)
class SceneObject:
    """One object on the canvas: a disk or an axis-aligned rectangle."""

    shape: str  # "disk" | "rectangle"
    x: int  # center
    y: int
    size: Tuple[int, ...]  # disk: (radius,); rectangle: (half_w, half_h)
    tag: str
    is_camouflaged: bool = True

    def __post_init__(self):
        if self.shape not in ("disk", "rectangle"):
            raise ValueError(f"unknown shape {self.shape!r}")
        expected = 1 if self.shape == "disk" else 2
        if len(self.size) != expected or any(s < 1 for s in self.size):
            raise ValueError(f"bad size {self.size} for {self.shape}")

    def mask(self, width: int, height: int) -> np.ndarray:
        yy, xx = np.mgrid[0:height, 0:width]
        if self.shape == "disk":
            r = self.size[0]
            return (xx - self.x) ** 2 + (yy - self.y) ** 2 <= r * r
        hw, hh = self.size
        return (np.abs(xx - self.x) <= hw) & (np.abs(yy - self.y) <= hh)


@dataclass(frozen=True)
class FaultPlan:
    """Detector faults injectable for recovery testing."""

    full_image_box: bool = False
    drop_detections: bool = False
    extra_background_box: bool = False


@dataclass(frozen=True)
class SyntheticScene:
    """A reproducible test world: canvas, objects, seeded noise."""

    width: int
    height: int
    objects: Tuple[SceneObject, ...]
    seed: int = 0
    noise_low: int = 0
    noise_high: int = 256

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        for obj in self.objects:
            m = obj.mask(self.width, self.height)
            if not m.any():
                raise ValueError(f"object {obj} has no pixels on the canvas")
            if not (0 <= obj.x < self.width and 0 <= obj.y < self.height):
                raise ValueError(f"object center {obj} outside canvas")

    def object_mask(self, index: int) -> BinaryMask:
        return BinaryMask(self.objects[index].mask(self.width, self.height))

    def camouflaged_mask(self) -> BinaryMask:
        merged = np.zeros((self.height, self.width), dtype=bool)
        for obj in self.objects:
            if obj.is_camouflaged:
                merged |= obj.mask(self.width, self.height)
        return BinaryMask(merged)

    def tight_box(self, index: int) -> BBox:
        m = self.objects[index].mask(self.width, self.height)
        ys, xs = np.nonzero(m)
        return BBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))

    def render(self) -> ImageBuffer:
        # Per-pixel noise everywhere keeps blurred pixels distinguishable
        # from originals, which the oracle scorer depends on.
        rng = np.random.default_rng(self.seed)
        canvas = rng.integers(self.noise_low, self.noise_high, (self.height, self.width, 3))
        for obj in self.objects:
            m = obj.mask(self.width, self.height)
            texture = rng.integers(self.noise_low, self.noise_high, (self.height, self.width, 3))
            canvas = np.where(m[:, :, None], texture, canvas)
        return ImageBuffer(canvas.astype(np.uint8))

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "seed": self.seed,
            "objects": [
                {
                    "shape": o.shape,
                    "x": o.x,
                    "y": o.y,
                    "size": list(o.size),
                    "tag": o.tag,
                    "is_camouflaged": o.is_camouflaged,
                }
                for o in self.objects
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticScene":
        objects = tuple(
            SceneObject(
                shape=o["shape"],
                x=o["x"],
                y=o["y"],
                size=tuple(o["size"]),
                tag=o["tag"],
                is_camouflaged=o["is_camouflaged"],
            )
            for o in data["objects"]
        )
        return cls(width=data["width"], height=data["height"], objects=objects, seed=data["seed"])


class OracleBackends:
    """All four model interfaces answered exactly from scene geometry."""

    def __init__(self, scene: SyntheticScene, fault_plan: Optional[FaultPlan] = None):
        self.scene = scene
        self.fault_plan = fault_plan or FaultPlan()
        self._rendered = scene.render()
        self._camo_mask = scene.camouflaged_mask()

    def segment_point(self, image: ImageBuffer, point) -> BinaryMask:
        x, y = point
        for i, obj in enumerate(self.scene.objects):
            m = obj.mask(self.scene.width, self.scene.height)
            if m[y, x]:
                return BinaryMask(m)
        return BinaryMask(np.zeros((self.scene.height, self.scene.width), dtype=bool))

    def segment_box(self, image: ImageBuffer, box: BBox) -> BinaryMask:
        merged = np.zeros((self.scene.height, self.scene.width), dtype=bool)
        for obj in self.scene.objects:
            if box.x_min <= obj.x <= box.x_max and box.y_min <= obj.y <= box.y_max:
                merged |= obj.mask(self.scene.width, self.scene.height)
        return BinaryMask(merged)

    def detect(self, image: ImageBuffer, text: str) -> List[DetectedBox]:
        if self.fault_plan.drop_detections:
            return []
        if self.fault_plan.full_image_box:
            full = BBox(0, 0, self.scene.width - 1, self.scene.height - 1)
            return [DetectedBox(box=full, confidence=DETECT_CONFIDENCE)]
        # Tag-matching objects, camouflaged or not: an open-set detector
        # cannot tell the two apart.
        boxes = [
            DetectedBox(box=self.scene.tight_box(i), confidence=DETECT_CONFIDENCE)
            for i, obj in enumerate(self.scene.objects)
            if obj.tag == text
        ]
        if self.fault_plan.extra_background_box:
            boxes.append(DetectedBox(box=self._background_box(), confidence=DETECT_CONFIDENCE))
        return boxes

    def _background_box(self) -> BBox:
        for i, obj in enumerate(self.scene.objects):
            if not obj.is_camouflaged:
                return self.scene.tight_box(i)
        side_w = max(1, self.scene.width // 5)
        side_h = max(1, self.scene.height // 5)
        return BBox(0, 0, side_w - 1, side_h - 1)

    def score(self, image: ImageBuffer, text: str) -> float:
        if image.data.shape != self._rendered.data.shape:
            raise ValueError("prompted image dimensions differ from the scene")
        sharp = np.all(image.data == self._rendered.data, axis=2)
        gt = self._camo_mask.data
        union = np.count_nonzero(sharp | gt)
        if union == 0:
            return 1.0
        return float(np.count_nonzero(sharp & gt) / union)


def oracle_backends(scene: SyntheticScene, fault_plan: Optional[FaultPlan] = None) -> Backends:
    oracle = OracleBackends(scene, fault_plan)
    return Backends(
        point_segmenter=oracle, box_segmenter=oracle, detector=oracle, scorer=oracle
    )


def random_scene(
    seed: int,
    width: int = 96,
    height: int = 96,
    tag: str = "creature",
    max_radius_fraction: float = 0.25,
    with_background_object: bool = False,
) -> SyntheticScene:
    """One camouflaged object (disk or rectangle) at a random position,
    optionally joined by a same-tag background object elsewhere."""
    rng = np.random.default_rng(seed)
    objects = []

    def place(is_camouflaged: bool, exclude: Optional[SceneObject]) -> SceneObject:
        for _ in range(100):
            shape = "disk" if rng.integers(2) == 0 else "rectangle"
            max_r = max(3, int(min(width, height) * max_radius_fraction))
            if shape == "disk":
                size = (int(rng.integers(3, max_r + 1)),)
                extent = size[0]
            else:
                size = (int(rng.integers(3, max_r + 1)), int(rng.integers(3, max_r + 1)))
                extent = max(size)
            x = int(rng.integers(extent, width - extent))
            y = int(rng.integers(extent, height - extent))
            if exclude is not None:
                sep = extent + max(exclude.size) + 2
                if abs(x - exclude.x) <= sep and abs(y - exclude.y) <= sep:
                    continue
            return SceneObject(shape=shape, x=x, y=y, size=size, tag=tag, is_camouflaged=is_camouflaged)
        raise RuntimeError("could not place a non-overlapping object")

    camo = place(True, None)
    objects.append(camo)
    if with_background_object:
        objects.append(place(False, camo))
    return SyntheticScene(width=width, height=height, objects=tuple(objects), seed=seed)
