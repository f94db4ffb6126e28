"""Model-set interface and the deterministic mock implementation.

A model set answers the four inference operations on plain numpy
arrays: RGB uint8 images in, boolean masks / box lists / similarity
scalars out. The mock set is checkpoint-free and fully deterministic;
it exists so the wire protocol and the serving layer can be tested
end-to-end without model weights.
"""

from __future__ import annotations

import zlib
from typing import Dict, List, Protocol, runtime_checkable

import numpy as np

LUMINANCE_TOLERANCE = 32.0
BRIGHT_MARGIN = 16.0


@runtime_checkable
class ModelSet(Protocol):
    def segment_point(self, image: np.ndarray, x: int, y: int) -> np.ndarray: ...

    def segment_box(
        self, image: np.ndarray, x_min: int, y_min: int, x_max: int, y_max: int
    ) -> np.ndarray: ...

    def detect(self, image: np.ndarray, text: str) -> List[dict]: ...

    def score(self, image: np.ndarray, text: str) -> float: ...

    def info(self) -> Dict[str, str]: ...


def _luminance(image: np.ndarray) -> np.ndarray:
    return image.astype(np.float64).mean(axis=2)


def _text_vector(text: str, dim: int = 6) -> np.ndarray:
    # A stable pseudo-embedding: the text hash seeds a fixed-length
    # unit vector, so equal strings always embed identically.
    seed = zlib.crc32(text.encode("utf-8"))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class MockModelSet:
    """Deterministic stand-in models driven by image luminance.

    Segmentation selects pixels whose luminance is close to the prompt
    (point) or above the local mean (box). Detection boxes the
    brightest region of the image. Scoring is the cosine similarity of
    small fixed image and text pseudo-embeddings.
    """

    def __init__(self, detector_threshold: float = 0.35):
        self.detector_threshold = detector_threshold

    def segment_point(self, image: np.ndarray, x: int, y: int) -> np.ndarray:
        lum = _luminance(image)
        return np.abs(lum - lum[y, x]) <= LUMINANCE_TOLERANCE

    def segment_box(
        self, image: np.ndarray, x_min: int, y_min: int, x_max: int, y_max: int
    ) -> np.ndarray:
        lum = _luminance(image)
        mask = np.zeros(lum.shape, dtype=bool)
        region = lum[y_min : y_max + 1, x_min : x_max + 1]
        mask[y_min : y_max + 1, x_min : x_max + 1] = region >= region.mean()
        return mask

    def _bright_region(self, image: np.ndarray) -> np.ndarray:
        lum = _luminance(image)
        return lum >= lum.mean() + BRIGHT_MARGIN

    def detect(self, image: np.ndarray, text: str) -> List[dict]:
        bright = self._bright_region(image)
        if not bright.any():
            return []
        # Confidence depends only on the query text, so thresholding is
        # reproducible across identical requests.
        confidence = 0.40 + 0.55 * (zlib.crc32(text.encode("utf-8")) % 1000) / 999.0
        if confidence < self.detector_threshold:
            return []
        ys, xs = np.nonzero(bright)
        return [
            {
                "x_min": int(xs.min()),
                "y_min": int(ys.min()),
                "x_max": int(xs.max()),
                "y_max": int(ys.max()),
                "confidence": round(confidence, 6),
            }
        ]

    def score(self, image: np.ndarray, text: str) -> float:
        channel_means = image.astype(np.float64).mean(axis=(0, 1)) / 255.0
        channel_stds = image.astype(np.float64).std(axis=(0, 1)) / 255.0
        embedding = np.concatenate([channel_means, channel_stds])
        norm = np.linalg.norm(embedding)
        if norm == 0.0:
            embedding = np.ones(6) / np.sqrt(6.0)
        else:
            embedding = embedding / norm
        return float(np.dot(embedding, _text_vector(text)))

    def info(self) -> Dict[str, str]:
        return {"segmenter": "mock", "detector": "mock", "scorer": "mock"}
