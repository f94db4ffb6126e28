"""Command-line entry point: configure and run the service."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, SidecarConfig
from .server import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camolabel-sidecar",
        description="Serve segmentation, detection, and image-text scoring over HTTP.",
    )
    parser.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    parser.add_argument("--model-set", choices=("real", "mock"), help="which models to load")
    parser.add_argument("--segmenter-checkpoint", type=Path)
    parser.add_argument("--detector-checkpoint", type=Path)
    parser.add_argument("--detector-config", type=Path)
    parser.add_argument("--scorer-checkpoint", type=Path)
    parser.add_argument("--device", help="inference device (default: cuda)")
    parser.add_argument(
        "--detector-threshold", type=float, help="detection confidence floor (default: 0.35)"
    )
    parser.add_argument("--host", help="bind address (default: 127.0.0.1)")
    parser.add_argument("--port", type=int, help="bind port (default: 8711)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def build_config(args) -> SidecarConfig:
    overrides = {
        "model_set": args.model_set,
        "segmenter_checkpoint": args.segmenter_checkpoint,
        "detector_checkpoint": args.detector_checkpoint,
        "detector_config": args.detector_config,
        "scorer_checkpoint": args.scorer_checkpoint,
        "device": args.device,
        "detector_threshold": args.detector_threshold,
        "host": args.host,
        "port": args.port,
    }
    if args.config is not None:
        return SidecarConfig.from_file(args.config, **overrides)
    return SidecarConfig(**{k: v for k, v in overrides.items() if v is not None})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    from .real import ModelLoadError

    try:
        serve(build_config(args))
    except (ConfigError, ModelLoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
