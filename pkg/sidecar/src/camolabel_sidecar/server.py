"""HTTP serving layer for the model wire protocol.

Routes:
  GET  /v1/health         -> {"status": "ok", "models": {...}}
  POST /v1/segment_point  {image_png_b64, point:{x,y}} -> {mask_png_b64}
  POST /v1/segment_box    {image_png_b64, box:{x_min,y_min,x_max,y_max}} -> {mask_png_b64}
  POST /v1/detect         {image_png_b64, text} -> {boxes: [...]}
  POST /v1/score          {image_png_b64, text} -> {similarity}

Malformed requests answer 400 and model failures 500, both with a JSON
body {"error", "detail"}. Masks travel as base64 8-bit grayscale PNG
with foreground 255. Connections are accepted concurrently but model
calls are serialized behind one lock.
"""

from __future__ import annotations

import base64
import binascii
import io
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image

from .config import SidecarConfig
from .models import MockModelSet, ModelSet

__all__ = ["BadRequest", "create_server", "serve"]

logger = logging.getLogger(__name__)

FOREGROUND = 255


class BadRequest(ValueError):
    """The request body failed validation (HTTP 400)."""


def _decode_image(payload: dict) -> np.ndarray:
    raw = payload.get("image_png_b64")
    if not isinstance(raw, str):
        raise BadRequest("'image_png_b64' must be a base64 string")
    try:
        blob = base64.b64decode(raw, validate=True)
        with Image.open(io.BytesIO(blob)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (binascii.Error, OSError) as exc:
        raise BadRequest(f"'image_png_b64' is not a decodable PNG: {exc}") from exc


def _encode_mask(mask: np.ndarray) -> str:
    arr = np.where(mask, np.uint8(FOREGROUND), np.uint8(0))
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _require_int(obj: dict, key: str) -> int:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise BadRequest(f"'{key}' must be an integer")
    return value


def _parse_point(payload: dict, width: int, height: int) -> tuple:
    point = payload.get("point")
    if not isinstance(point, dict):
        raise BadRequest("'point' must be an object with integer 'x' and 'y'")
    x = _require_int(point, "x")
    y = _require_int(point, "y")
    if not (0 <= x < width and 0 <= y < height):
        raise BadRequest(f"point ({x}, {y}) lies outside the {width}x{height} image")
    return x, y


def _parse_box(payload: dict, width: int, height: int) -> tuple:
    box = payload.get("box")
    if not isinstance(box, dict):
        raise BadRequest("'box' must be an object with x_min/y_min/x_max/y_max")
    coords = tuple(_require_int(box, k) for k in ("x_min", "y_min", "x_max", "y_max"))
    x_min, y_min, x_max, y_max = coords
    if x_min > x_max or y_min > y_max:
        raise BadRequest(f"box corners are not ordered: {coords}")
    if x_min < 0 or y_min < 0 or x_max >= width or y_max >= height:
        raise BadRequest(f"box {coords} lies outside the {width}x{height} image")
    return coords


def _parse_text(payload: dict) -> str:
    text = payload.get("text")
    if not isinstance(text, str) or not text.strip():
        raise BadRequest("'text' must be a non-empty string")
    return text


class SidecarHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, handler, models: ModelSet):
        super().__init__(address, handler)
        self.models = models
        self.model_lock = threading.Lock()


class _Handler(BaseHTTPRequestHandler):
    server: SidecarHTTPServer

    def log_message(self, fmt, *args):
        logger.debug("%s " + fmt, self.client_address[0], *args)

    def _send(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_error(self, status: int, error: str, detail: str) -> None:
        self._send(status, {"error": error, "detail": detail})

    def do_GET(self):
        if self.path != "/v1/health":
            self._send_error(404, "not_found", f"unknown route: {self.path}")
            return
        self._send(200, {"status": "ok", "models": self.server.models.info()})

    def do_POST(self):
        handlers = {
            "/v1/segment_point": self._segment_point,
            "/v1/segment_box": self._segment_box,
            "/v1/detect": self._detect,
            "/v1/score": self._score,
        }
        handler = handlers.get(self.path)
        if handler is None:
            self._send_error(404, "not_found", f"unknown route: {self.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length))
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise BadRequest(f"request body is not valid JSON: {exc}") from exc
            if not isinstance(payload, dict):
                raise BadRequest("request body must be a JSON object")
            body = handler(payload)
        except BadRequest as exc:
            self._send_error(400, "bad_request", str(exc))
            return
        except Exception as exc:
            logger.exception("model failure on %s", self.path)
            self._send_error(500, "model_failure", str(exc))
            return
        self._send(200, body)

    def _segment_point(self, payload: dict) -> dict:
        image = _decode_image(payload)
        h, w = image.shape[:2]
        x, y = _parse_point(payload, w, h)
        with self.server.model_lock:
            mask = self.server.models.segment_point(image, x, y)
        return {"mask_png_b64": _encode_mask(mask)}

    def _segment_box(self, payload: dict) -> dict:
        image = _decode_image(payload)
        h, w = image.shape[:2]
        coords = _parse_box(payload, w, h)
        with self.server.model_lock:
            mask = self.server.models.segment_box(image, *coords)
        return {"mask_png_b64": _encode_mask(mask)}

    def _detect(self, payload: dict) -> dict:
        image = _decode_image(payload)
        text = _parse_text(payload)
        with self.server.model_lock:
            boxes = self.server.models.detect(image, text)
        return {"boxes": boxes}

    def _score(self, payload: dict) -> dict:
        image = _decode_image(payload)
        text = _parse_text(payload)
        with self.server.model_lock:
            similarity = self.server.models.score(image, text)
        return {"similarity": similarity}


def _build_models(config: SidecarConfig) -> ModelSet:
    if config.model_set == "mock":
        return MockModelSet(detector_threshold=config.detector_threshold)
    from .real import RealModelSet

    return RealModelSet(config)


def create_server(config: SidecarConfig) -> SidecarHTTPServer:
    """Load the models and bind the service; models load before the
    socket accepts traffic, so a failed load never half-starts."""
    models = _build_models(config)
    return SidecarHTTPServer((config.host, config.port), _Handler, models)


def serve(config: SidecarConfig) -> None:
    server = create_server(config)
    host, port = server.server_address[:2]
    logger.info("serving %s models on http://%s:%s", config.model_set, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
