"""Command-line interface.

Subcommands: segment, choose, evaluate, run-all, synth. Exit codes:
0 clean, 1 when per-sample failures occurred, 2 on startup or
configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .backends.client import SidecarError
from .core import PipelineParams
from .pipeline import (
    ManifestError,
    RunConfig,
    generate_synthetic_dataset,
    run_all,
    run_choose,
    run_evaluate,
    run_segment,
)

EXIT_CLEAN = 0
EXIT_SAMPLE_FAILURES = 1
EXIT_STARTUP_ERROR = 2


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    parser.add_argument("--manifest", type=Path, help="dataset manifest (JSONL)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--backend", help="'oracle' or a sidecar endpoint URL (default: oracle)"
    )
    parser.add_argument("--scene-file", type=Path, help="scene file for the oracle backend")
    parser.add_argument("--workers", type=int, help="parallel sample workers (default: 1)")
    parser.add_argument("--seed", type=int, help="run seed (default: 0)")
    params = parser.add_argument_group("pipeline parameters")
    params.add_argument("--alpha", type=float, help="box-coverage ceiling (default 0.95)")
    params.add_argument("--beta", type=float, help="box regeneration scale (default 0.20)")
    params.add_argument("--delta", type=float, help="mask-erasure ceiling (default 0.80)")
    params.add_argument("--sigma", type=float, help="blur std-dev in pixels (default 50)")
    params.add_argument("--template", help="prompt template with one {text} slot (default 'A {text}')")


def _build_params(args) -> PipelineParams:
    defaults = PipelineParams()
    return PipelineParams(
        alpha=args.alpha if args.alpha is not None else defaults.alpha,
        beta=args.beta if args.beta is not None else defaults.beta,
        delta=args.delta if args.delta is not None else defaults.delta,
        sigma=args.sigma if args.sigma is not None else defaults.sigma,
        prompt_template=args.template if args.template is not None else defaults.prompt_template,
    )


def _build_config(args) -> RunConfig:
    overrides = {
        "manifest": args.manifest,
        "output_dir": args.out,
        "backend": args.backend,
        "scene_file": args.scene_file,
        "workers": args.workers,
        "seed": args.seed,
    }
    if any(v is not None for v in (args.alpha, args.beta, args.delta, args.sigma, args.template)):
        overrides["params"] = _build_params(args)
    if args.config is not None:
        return RunConfig.from_file(args.config, **overrides)
    if args.manifest is None or args.out is None:
        raise ManifestError("either --config or both --manifest and --out are required")
    return RunConfig(
        manifest=args.manifest,
        output_dir=args.out,
        backend=args.backend or "oracle",
        params=overrides.get("params", PipelineParams()),
        workers=args.workers or 1,
        seed=args.seed or 0,
        scene_file=args.scene_file,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camolabel",
        description="Pseudo-label generation, selection, and evaluation for "
        "weakly-supervised camouflaged object detection.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="phase 1: generate both candidate masks per sample")
    _add_run_arguments(seg)

    cho = sub.add_parser("choose", help="phase 2: select the final pseudo mask per sample")
    _add_run_arguments(cho)

    run = sub.add_parser("run-all", help="segment + choose (+ evaluate when ground truth exists)")
    _add_run_arguments(run)

    ev = sub.add_parser("evaluate", help="compute the six metrics over matching mask stems")
    ev.add_argument("--pred", type=Path, required=True, help="directory of predicted maps (PNG)")
    ev.add_argument("--gt", type=Path, required=True, help="directory of ground-truth masks (PNG)")
    ev.add_argument("--out", type=Path, required=True, help="report output directory")

    syn = sub.add_parser("synth", help="emit a synthetic oracle dataset")
    syn.add_argument("--out", type=Path, required=True, help="dataset directory")
    syn.add_argument("--count", type=int, default=10, help="number of scenes (default 10)")
    syn.add_argument("--seed", type=int, default=0, help="scene seed (default 0)")
    syn.add_argument("--size", type=int, default=96, help="canvas side length (default 96)")
    syn.add_argument(
        "--with-background-object",
        action="store_true",
        help="add a same-tag non-camouflaged object to each scene",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            manifest = generate_synthetic_dataset(
                args.out,
                count=args.count,
                seed=args.seed,
                width=args.size,
                height=args.size,
                with_background_object=args.with_background_object,
            )
            print(f"wrote {args.count} scenes; manifest at {manifest}")
            return EXIT_CLEAN
        if args.command == "evaluate":
            report, _ = run_evaluate(args.pred, args.gt, args.out)
            for col, value in report.means.items():
                print(f"{col}: {value if value is not None else 'skipped'}")
            return EXIT_CLEAN
        config = _build_config(args)
        runner = {"segment": run_segment, "choose": run_choose, "run-all": run_all}[args.command]
        result = runner(config)
        print(f"{len(result.processed)} samples processed, {len(result.skipped)} skipped")
        return result.exit_code
    except (ManifestError, SidecarError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STARTUP_ERROR


if __name__ == "__main__":
    sys.exit(main())
