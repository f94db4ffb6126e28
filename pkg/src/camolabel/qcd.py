"""Phase 2 (CHOOSE): reverse-blur visual prompting and similarity selection.

Each candidate mask is turned into a visually prompted image (original
pixels inside the mask, Gaussian-blurred pixels outside), the prompted
images are scored against the formatted text prompt, and the argmax
candidate becomes the final pseudo mask.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .backends.interfaces import BackendError, ImageTextScorer
from .core import BinaryMask, CandidatePair, ImageBuffer, PipelineParams, TextTag

__all__ = ["SelectionRecord", "reverse_blur_prompt", "cosine_similarity", "choose_mask"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelectionRecord:
    """Outcome of the candidate choice for one sample."""

    chosen_path: str  # "point" | "text"
    score_point: float
    score_text: float
    prompt_used: str


def _gaussian_kernel(sigma: float) -> np.ndarray:
    # Truncated at radius ceil(3*sigma), renormalized after truncation.
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(image: ImageBuffer, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge handling, float64 output."""
    kernel = _gaussian_kernel(sigma)
    out = image.data.astype(np.float64)
    for axis in (0, 1):
        out = ndimage.correlate1d(out, kernel, axis=axis, mode="nearest")
    return out


def reverse_blur_prompt(image: ImageBuffer, mask: BinaryMask, sigma: float) -> ImageBuffer:
    """Keep masked pixels verbatim; blur everything outside the mask."""
    if mask.data.shape != (image.height, image.width):
        raise ValueError("mask dimensions must match the image")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    blurred = np.rint(gaussian_blur(image, sigma)).clip(0, 255).astype(np.uint8)
    out = np.where(mask.data[:, :, None], image.data, blurred)
    return ImageBuffer(out)


def cosine_similarity(u, v) -> float:
    """Standard cosine similarity of two equal-length non-zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1 or u.size == 0 or u.shape != v.shape:
        raise ValueError(f"vectors must be 1-D, non-empty, and equal length: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.dot(u, v) / (nu * nv))


def choose_mask(
    image: ImageBuffer,
    candidates: CandidatePair,
    text: TextTag,
    scorer: ImageTextScorer,
    params: PipelineParams,
) -> tuple[BinaryMask, SelectionRecord]:
    """Pick the candidate whose prompted image scores higher.

    On an exact tie the point-path mask wins: the point annotation is
    the stronger localization signal. Scores are used raw; only their
    ordering matters.
    """
    prompt = params.prompt_template.format(text=text.tag)
    scores = {}
    for name, mask in (("point", candidates.point_mask), ("text", candidates.text_mask)):
        prompted = reverse_blur_prompt(image, mask, params.sigma)
        try:
            scores[name] = float(scorer.score(prompted, prompt))
        except Exception as exc:
            raise BackendError(f"scorer failed on the {name} candidate: {exc}") from exc
    if not candidates.point_mask.data.any() and not candidates.text_mask.data.any():
        logger.warning("both candidate masks are empty; emitting the point mask")
    chosen_path = "point" if scores["point"] >= scores["text"] else "text"
    chosen = candidates.point_mask if chosen_path == "point" else candidates.text_mask
    record = SelectionRecord(
        chosen_path=chosen_path,
        score_point=scores["point"],
        score_text=scores["text"],
        prompt_used=prompt,
    )
    return chosen, record
