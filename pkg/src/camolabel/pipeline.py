"""Orchestration: dataset ingestion, phase 1-2 execution, persistence,
and metric reporting.

Datasets are line-delimited JSON manifests, one record per sample:
{"image": "...", "points": [[x, y], ...], "text": "...", "gt": "..."?}
with paths resolved relative to the manifest file. Masks persist as
8-bit grayscale PNG, 255 = foreground.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import imgio
from .backends.client import sidecar_client
from .backends.interfaces import Backends
from .backends.oracle import SyntheticScene, oracle_backends, random_scene
from .core import BinaryMask, CandidatePair, GrayMap, PipelineParams, PointSet, Sample, TextTag
from .metrics import METRIC_COLUMNS, MetricReport, PRCurve, evaluate_dataset
from .pcg import generate_candidates
from .qcd import choose_mask

__all__ = [
    "ManifestError",
    "RunConfig",
    "RunResult",
    "load_manifest",
    "run_segment",
    "run_choose",
    "run_evaluate",
    "run_all",
    "generate_synthetic_dataset",
]

logger = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "CAMOLABEL_SIDECAR_ENDPOINT"
CANDIDATE_DIR = "candidates"
FINAL_DIR = "final"
REPORT_DIR = "report"


class ManifestError(ValueError):
    """A dataset manifest failed validation."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs; `backend` is 'oracle' or a sidecar URL."""

    manifest: Path
    output_dir: Path
    backend: str = "oracle"
    params: PipelineParams = field(default_factory=PipelineParams)
    workers: int = 1
    seed: int = 0
    scene_file: Optional[Path] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        with open(path) as fh:
            raw = json.load(fh)
        params = PipelineParams(**raw.pop("params", {}))
        raw.update({k: v for k, v in overrides.items() if v is not None})
        if "params" in raw:
            params = raw.pop("params")
        for key in ("manifest", "output_dir", "scene_file"):
            if raw.get(key) is not None:
                raw[key] = Path(raw[key])
        return cls(params=params, **raw)

    def resolved_backend(self) -> str:
        return os.environ.get(ENDPOINT_ENV_VAR) or self.backend


@dataclass
class RunResult:
    """Per-phase outcome; exit code 1 when any sample failed."""

    processed: List[str] = field(default_factory=list)
    skipped: Dict[str, str] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if self.skipped else 0


def _stem(sample: Sample) -> str:
    return Path(sample.image_ref).stem


def load_manifest(path) -> List[Sample]:
    """Parse and validate a JSONL manifest; every error names its line."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    samples: List[Sample] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ManifestError(f"{path}:{lineno}: record must be an object")
            for required in ("image", "points", "text"):
                if required not in record:
                    raise ManifestError(f"{path}:{lineno}: missing field {required!r}")
            try:
                points = PointSet(record["points"])
                text = TextTag(str(record["text"]))
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
            image_path = base / record["image"]
            if not image_path.is_file():
                raise ManifestError(f"{path}:{lineno}: image not found: {image_path}")
            gt_ref = None
            if record.get("gt") is not None:
                gt_path = base / record["gt"]
                if not gt_path.is_file():
                    raise ManifestError(f"{path}:{lineno}: ground truth not found: {gt_path}")
                gt_ref = str(gt_path)
            samples.append(
                Sample(image_ref=str(image_path), points=points, text=text, gt_ref=gt_ref)
            )
    if not samples:
        raise ManifestError(f"{path}: manifest contains no samples")
    return samples


class _BackendProvider:
    """Maps a sample stem to its backend bundle.

    Oracle mode needs a per-sample scene; sidecar mode shares one client.
    """

    def __init__(self, config: RunConfig):
        backend = config.resolved_backend()
        self._shared: Optional[Backends] = None
        self._scenes: Dict[str, SyntheticScene] = {}
        if backend == "oracle":
            scene_file = config.scene_file or config.manifest.parent / "scenes.json"
            if not Path(scene_file).is_file():
                raise ManifestError(f"oracle backend requires a scene file, not found: {scene_file}")
            with open(scene_file) as fh:
                raw = json.load(fh)
            self._scenes = {stem: SyntheticScene.from_dict(d) for stem, d in raw.items()}
        else:
            self._shared = sidecar_client(backend)

    def for_sample(self, stem: str) -> Backends:
        if self._shared is not None:
            return self._shared
        if stem not in self._scenes:
            raise ManifestError(f"no synthetic scene registered for sample {stem!r}")
        return oracle_backends(self._scenes[stem])


def _boxes_json(boxes) -> list:
    out = []
    for entry in boxes:
        box = getattr(entry, "box", entry)
        row = {"x_min": box.x_min, "y_min": box.y_min, "x_max": box.x_max, "y_max": box.y_max}
        if hasattr(entry, "confidence"):
            row["confidence"] = entry.confidence
        out.append(row)
    return out


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_segment(config: RunConfig) -> RunResult:
    """Phase 1 over the whole manifest: write both candidate masks and a
    decision log per sample. One sample's failure never aborts the run."""
    samples = load_manifest(config.manifest)
    provider = _BackendProvider(config)  # startup errors abort before any output
    out_dir = Path(config.output_dir) / CANDIDATE_DIR
    out_dir.mkdir(parents=True, exist_ok=True)
    result = RunResult()

    def process(sample: Sample) -> Tuple[str, Optional[str]]:
        stem = _stem(sample)
        try:
            backends = provider.for_sample(stem)
            pair, trace = generate_candidates(sample, backends, config.params)
            imgio.save_mask(pair.point_mask, out_dir / f"{stem}_point.png")
            imgio.save_mask(pair.text_mask, out_dir / f"{stem}_text.png")
            _write_json(
                out_dir / f"{stem}.json",
                {
                    "detected_boxes": _boxes_json(trace.text_path.detected_boxes),
                    "rectified_boxes": _boxes_json(trace.text_path.rectified_boxes),
                    "erasure_triggered": trace.text_path.erasure_triggered,
                },
            )
            return stem, None
        except Exception as exc:
            return stem, str(exc)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        outcomes = list(pool.map(process, samples))
    for stem, error in outcomes:
        if error is None:
            result.processed.append(stem)
        else:
            logger.error("sample %s skipped: %s", stem, error)
            result.skipped[stem] = error
    _write_skip_log(Path(config.output_dir), "segment", result)
    return result


def run_choose(config: RunConfig) -> RunResult:
    """Phase 2: select the final pseudo mask per sample and record the
    selection in selections.jsonl (manifest order)."""
    samples = load_manifest(config.manifest)
    provider = _BackendProvider(config)
    candidate_dir = Path(config.output_dir) / CANDIDATE_DIR
    final_dir = Path(config.output_dir) / FINAL_DIR
    final_dir.mkdir(parents=True, exist_ok=True)
    result = RunResult()
    records = []

    def process(sample: Sample):
        stem = _stem(sample)
        try:
            image = imgio.load_image(sample.image_ref)
            point_path = candidate_dir / f"{stem}_point.png"
            text_path = candidate_dir / f"{stem}_text.png"
            for p in (point_path, text_path):
                if not p.is_file():
                    raise FileNotFoundError(f"missing candidate file: {p}")
            try:
                pair = CandidatePair(
                    point_mask=imgio.load_mask(point_path),
                    text_mask=imgio.load_mask(text_path),
                )
            except Exception as exc:
                raise ValueError(f"could not decode candidates for {stem}: {exc}") from exc
            scorer = provider.for_sample(stem).scorer
            chosen, record = choose_mask(image, pair, sample.text, scorer, config.params)
            imgio.save_mask(chosen, final_dir / f"{stem}.png")
            return stem, record, None
        except Exception as exc:
            return stem, None, str(exc)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        outcomes = list(pool.map(process, samples))
    for stem, record, error in outcomes:
        if error is None:
            result.processed.append(stem)
            records.append(
                {
                    "stem": stem,
                    "chosen_path": record.chosen_path,
                    "score_point": record.score_point,
                    "score_text": record.score_text,
                    "prompt": record.prompt_used,
                }
            )
        else:
            logger.error("sample %s skipped: %s", stem, error)
            result.skipped[stem] = error
    with open(Path(config.output_dir) / "selections.jsonl", "w") as fh:
        for row in records:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    _write_skip_log(Path(config.output_dir), "choose", result)
    return result


def _write_skip_log(out_dir: Path, phase: str, result: RunResult) -> None:
    if result.skipped:
        with open(out_dir / f"skips_{phase}.jsonl", "w") as fh:
            for stem, error in sorted(result.skipped.items()):
                fh.write(json.dumps({"stem": stem, "error": error}, sort_keys=True) + "\n")


def run_evaluate(pred_dir, gt_dir, out_dir) -> Tuple[MetricReport, PRCurve]:
    """Evaluate every prediction with a matching ground-truth stem and
    write the per-image CSV, aggregate JSON/CSV, and PR-curve CSV."""
    pred_dir, gt_dir, out_dir = Path(pred_dir), Path(gt_dir), Path(out_dir)
    preds = {p.stem: p for p in sorted(pred_dir.glob("*.png"))}
    gts = {p.stem: p for p in sorted(gt_dir.glob("*.png"))}
    common = sorted(set(preds) & set(gts))
    missing_gt = sorted(set(preds) - set(gts))
    missing_pred = sorted(set(gts) - set(preds))
    for stem in missing_gt:
        logger.warning("no ground truth for %s; excluded from the report", stem)
    if not common:
        raise ValueError(f"no matching stems between {pred_dir} and {gt_dir}")
    pairs: List[Tuple[GrayMap, BinaryMask]] = []
    for stem in common:
        pairs.append((imgio.load_graymap(preds[stem]), imgio.load_mask(gts[stem])))
    report, curve = evaluate_dataset(pairs, names=common)

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "per_image.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("name",) + METRIC_COLUMNS)
        for m in report.per_image:
            writer.writerow([m.name] + [_csv_cell(getattr(m, col)) for col in METRIC_COLUMNS])
    with open(out_dir / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        writer.writerow([_csv_cell(report.means[col]) for col in METRIC_COLUMNS])
    _write_json(
        out_dir / "aggregate.json",
        {
            "means": report.means,
            "n_images": report.n_images,
            "n_f_skipped": report.n_f_skipped,
            "excluded_missing_gt": missing_gt,
            "unmatched_gt": missing_pred,
        },
    )
    precision = curve.precision
    recall = curve.recall
    with open(out_dir / "pr_curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("threshold", "precision", "recall"))
        for t in range(len(precision)):
            writer.writerow((t, repr(float(precision[t])), repr(float(recall[t]))))
    return report, curve


def _csv_cell(value) -> str:
    return "" if value is None else repr(float(value))


def run_all(config: RunConfig) -> RunResult:
    """segment + choose, then evaluate against manifest ground truths
    when every sample carries one."""
    seg = run_segment(config)
    cho = run_choose(config)
    combined = RunResult(
        processed=[s for s in seg.processed if s in set(cho.processed)],
        skipped={**seg.skipped, **cho.skipped},
    )
    samples = load_manifest(config.manifest)
    if all(s.gt_ref for s in samples) and combined.processed:
        gt_dir = Path(samples[0].gt_ref).parent
        run_evaluate(Path(config.output_dir) / FINAL_DIR, gt_dir, Path(config.output_dir) / REPORT_DIR)
    return combined


def generate_synthetic_dataset(
    out_dir,
    count: int,
    seed: int = 0,
    width: int = 96,
    height: int = 96,
    with_background_object: bool = False,
) -> Path:
    """Emit a synthetic oracle dataset: images, ground truths, manifest,
    and the scene file the oracle backends reconstruct from."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)
    scenes = {}
    manifest_lines = []
    for i in range(count):
        stem = f"scene_{i:04d}"
        scene = random_scene(
            seed=seed + i,
            width=width,
            height=height,
            with_background_object=with_background_object,
        )
        imgio.save_image(scene.render(), out_dir / "images" / f"{stem}.png")
        imgio.save_mask(scene.camouflaged_mask(), out_dir / "gt" / f"{stem}.png")
        camo = next(o for o in scene.objects if o.is_camouflaged)
        manifest_lines.append(
            {
                "image": f"images/{stem}.png",
                "points": [[camo.x, camo.y]],
                "text": camo.tag,
                "gt": f"gt/{stem}.png",
            }
        )
        scenes[stem] = scene.to_dict()
    with open(out_dir / "manifest.jsonl", "w") as fh:
        for row in manifest_lines:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    _write_json(out_dir / "scenes.json", scenes)
    return out_dir / "manifest.jsonl"
