"""Model backends: abstract interfaces, the synthetic-scene oracle, and
the sidecar wire-protocol client."""

from .interfaces import (
    Backends,
    BackendError,
    BoxSegmenter,
    DetectedBox,
    ImageTextScorer,
    PointSegmenter,
    TextBoxDetector,
)
from .oracle import FaultPlan, OracleBackends, SceneObject, SyntheticScene, oracle_backends, random_scene
from .client import (
    MaskDimensionError,
    SidecarClient,
    SidecarError,
    SidecarPayloadError,
    SidecarStatusError,
    SidecarTransportError,
    sidecar_client,
)

__all__ = [
    "Backends",
    "BackendError",
    "BoxSegmenter",
    "DetectedBox",
    "ImageTextScorer",
    "PointSegmenter",
    "TextBoxDetector",
    "FaultPlan",
    "OracleBackends",
    "SceneObject",
    "SyntheticScene",
    "oracle_backends",
    "random_scene",
    "MaskDimensionError",
    "SidecarClient",
    "SidecarError",
    "SidecarPayloadError",
    "SidecarStatusError",
    "SidecarTransportError",
    "sidecar_client",
]
