"""HTTP client for the model sidecar.

One request per call, no retries: a failing sidecar surfaces
immediately with a distinct error class per failure mode. Masks travel
as base64 8-bit grayscale PNG (foreground 255).
"""

from __future__ import annotations

import threading
from typing import List

import requests

from .. import imgio
from ..core import BBox, BinaryMask, ImageBuffer
from .interfaces import Backends, DetectedBox

__all__ = [
    "SidecarError",
    "SidecarTransportError",
    "SidecarStatusError",
    "SidecarPayloadError",
    "MaskDimensionError",
    "SidecarClient",
    "sidecar_client",
]

DEFAULT_TIMEOUT = 60.0
DEFAULT_MAX_IN_FLIGHT = 4


class SidecarError(RuntimeError):
    """Base class for sidecar client failures."""


class SidecarTransportError(SidecarError):
    """Connection, DNS, or timeout failure."""


class SidecarStatusError(SidecarError):
    """Non-2xx response from the sidecar."""

    def __init__(self, status: int, detail: str):
        super().__init__(f"sidecar returned status {status}: {detail}")
        self.status = status


class SidecarPayloadError(SidecarError):
    """Response body was not the expected JSON shape."""


class MaskDimensionError(SidecarError):
    """Returned mask dimensions do not match the request image."""


class SidecarClient:
    """Implements all four model interfaces over the wire protocol."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()
        self._in_flight = threading.BoundedSemaphore(max_in_flight)
        self.health()

    def _url(self, path: str) -> str:
        return f"{self.endpoint}/v1/{path}"

    def _post(self, path: str, payload: dict) -> dict:
        with self._in_flight:
            try:
                resp = self._session.post(self._url(path), json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                raise SidecarTransportError(f"POST /v1/{path} failed: {exc}") from exc
        return self._decode(resp, path)

    def _decode(self, resp, path: str) -> dict:
        if not (200 <= resp.status_code < 300):
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise SidecarStatusError(resp.status_code, str(detail))
        try:
            body = resp.json()
        except ValueError as exc:
            raise SidecarPayloadError(f"/v1/{path} returned non-JSON body") from exc
        if not isinstance(body, dict):
            raise SidecarPayloadError(f"/v1/{path} returned {type(body).__name__}, expected object")
        return body

    def _require(self, body: dict, key: str, path: str):
        if key not in body:
            raise SidecarPayloadError(f"/v1/{path} response missing {key!r}")
        return body[key]

    def _decode_mask(self, body: dict, path: str, image: ImageBuffer) -> BinaryMask:
        payload = self._require(body, "mask_png_b64", path)
        try:
            mask = imgio.mask_from_b64(payload)
        except Exception as exc:
            raise SidecarPayloadError(f"/v1/{path} returned an undecodable mask: {exc}") from exc
        if mask.data.shape != (image.height, image.width):
            raise MaskDimensionError(
                f"/v1/{path} mask is {mask.width}x{mask.height}, "
                f"image is {image.width}x{image.height}"
            )
        return mask

    def health(self) -> dict:
        try:
            resp = self._session.get(self._url("health"), timeout=self.timeout)
        except requests.RequestException as exc:
            raise SidecarTransportError(f"health check failed: {exc}") from exc
        body = self._decode(resp, "health")
        if body.get("status") != "ok":
            raise SidecarPayloadError(f"sidecar health is {body.get('status')!r}, expected 'ok'")
        return body

    def segment_point(self, image: ImageBuffer, point) -> BinaryMask:
        x, y = point
        body = self._post(
            "segment_point",
            {"image_png_b64": imgio.image_to_b64(image), "point": {"x": int(x), "y": int(y)}},
        )
        return self._decode_mask(body, "segment_point", image)

    def segment_box(self, image: ImageBuffer, box: BBox) -> BinaryMask:
        body = self._post(
            "segment_box",
            {
                "image_png_b64": imgio.image_to_b64(image),
                "box": {
                    "x_min": box.x_min,
                    "y_min": box.y_min,
                    "x_max": box.x_max,
                    "y_max": box.y_max,
                },
            },
        )
        return self._decode_mask(body, "segment_box", image)

    def detect(self, image: ImageBuffer, text: str) -> List[DetectedBox]:
        body = self._post("detect", {"image_png_b64": imgio.image_to_b64(image), "text": text})
        raw = self._require(body, "boxes", "detect")
        if not isinstance(raw, list):
            raise SidecarPayloadError("/v1/detect 'boxes' must be a list")
        boxes = []
        for entry in raw:
            try:
                box = BBox(entry["x_min"], entry["y_min"], entry["x_max"], entry["y_max"])
                box.validate_for(image.width, image.height)
                boxes.append(DetectedBox(box=box, confidence=float(entry["confidence"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise SidecarPayloadError(f"/v1/detect returned a malformed box: {entry!r}") from exc
        return boxes

    def score(self, image: ImageBuffer, text: str) -> float:
        body = self._post("score", {"image_png_b64": imgio.image_to_b64(image), "text": text})
        similarity = self._require(body, "similarity", "score")
        try:
            return float(similarity)
        except (TypeError, ValueError) as exc:
            raise SidecarPayloadError(f"/v1/score similarity is not a number: {similarity!r}") from exc


def sidecar_client(
    endpoint: str,
    timeout: float = DEFAULT_TIMEOUT,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
) -> Backends:
    """Health-check the endpoint and wrap it as the four model interfaces."""
    client = SidecarClient(endpoint, timeout=timeout, max_in_flight=max_in_flight)
    return Backends(
        point_segmenter=client, box_segmenter=client, detector=client, scorer=client
    )
