"""Service configuration.

`model_set` selects the inference implementation: "real" loads the
foundation-model checkpoints (and the process exits nonzero when they
cannot be loaded), "mock" serves a deterministic checkpoint-free model
set intended for protocol tests and local pipeline development.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

DEFAULT_DETECTOR_THRESHOLD = 0.35


class ConfigError(ValueError):
    """The service configuration is invalid."""


@dataclass(frozen=True)
class SidecarConfig:
    model_set: str = "real"
    segmenter_checkpoint: Optional[Path] = None
    detector_checkpoint: Optional[Path] = None
    detector_config: Optional[Path] = None
    scorer_checkpoint: Optional[Path] = None
    device: str = "cuda"
    detector_threshold: float = DEFAULT_DETECTOR_THRESHOLD
    host: str = "127.0.0.1"
    port: int = 8711

    def __post_init__(self):
        if self.model_set not in ("real", "mock"):
            raise ConfigError(f"model_set must be 'real' or 'mock', got {self.model_set!r}")
        if not (0.0 <= self.detector_threshold <= 1.0):
            raise ConfigError(
                f"detector_threshold must lie in [0, 1], got {self.detector_threshold}"
            )
        if not (0 <= self.port <= 65535):
            raise ConfigError(f"port must lie in [0, 65535], got {self.port}")
        for name in ("segmenter_checkpoint", "detector_checkpoint", "detector_config", "scorer_checkpoint"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))

    @classmethod
    def from_file(cls, path, **overrides) -> "SidecarConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"could not read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)
