"""PNG serialization for images and masks.

Masks travel and persist as 8-bit grayscale PNG with foreground = 255
and background = 0; this encoding is shared with the sidecar wire
protocol.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image

from .core import BinaryMask, GrayMap, ImageBuffer

FOREGROUND = 255


def image_to_png_bytes(image: ImageBuffer) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image.data, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def image_from_png_bytes(data: bytes) -> ImageBuffer:
    with Image.open(io.BytesIO(data)) as im:
        return ImageBuffer(np.asarray(im.convert("RGB"), dtype=np.uint8))


def mask_to_png_bytes(mask: BinaryMask) -> bytes:
    buf = io.BytesIO()
    arr = np.where(mask.data, np.uint8(FOREGROUND), np.uint8(0))
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def mask_from_png_bytes(data: bytes) -> BinaryMask:
    with Image.open(io.BytesIO(data)) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return BinaryMask(arr > 127)


def load_image(path) -> ImageBuffer:
    with open(path, "rb") as fh:
        return image_from_png_bytes(fh.read())


def save_image(image: ImageBuffer, path) -> None:
    with open(path, "wb") as fh:
        fh.write(image_to_png_bytes(image))


def load_mask(path) -> BinaryMask:
    with open(path, "rb") as fh:
        return mask_from_png_bytes(fh.read())


def save_mask(mask: BinaryMask, path) -> None:
    with open(path, "wb") as fh:
        fh.write(mask_to_png_bytes(mask))


def load_graymap(path) -> GrayMap:
    """Load an 8-bit grayscale prediction map, normalized by 255."""
    with open(path, "rb") as fh:
        with Image.open(io.BytesIO(fh.read())) as im:
            arr = np.asarray(im.convert("L"), dtype=np.float64)
    return GrayMap(arr / 255.0)


def image_to_b64(image: ImageBuffer) -> str:
    return base64.b64encode(image_to_png_bytes(image)).decode("ascii")


def image_from_b64(payload: str) -> ImageBuffer:
    return image_from_png_bytes(base64.b64decode(payload))


def mask_to_b64(mask: BinaryMask) -> str:
    return base64.b64encode(mask_to_png_bytes(mask)).decode("ascii")


def mask_from_b64(payload: str) -> BinaryMask:
    return mask_from_png_bytes(base64.b64decode(payload))
