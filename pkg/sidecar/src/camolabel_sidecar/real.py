"""Foundation-model implementations of the model-set interface.

All heavyweight imports happen at load time, not import time, so the
serving layer and the mock path work without torch installed. Loading
fails loudly: a missing dependency or checkpoint raises ModelLoadError
and the CLI exits nonzero, per the startup contract.
"""

from __future__ import annotations

from typing import Dict, List

import numpy as np

from .config import SidecarConfig


class ModelLoadError(RuntimeError):
    """A model checkpoint or dependency could not be loaded."""


def _require_checkpoint(name: str, path) -> None:
    if path is None:
        raise ModelLoadError(f"{name} checkpoint path is not configured")
    if not path.is_file():
        raise ModelLoadError(f"{name} checkpoint not found: {path}")


class RealModelSet:
    """SAM for segmentation, Grounding DINO for detection, CLIP for scoring."""

    def __init__(self, config: SidecarConfig):
        _require_checkpoint("segmenter", config.segmenter_checkpoint)
        _require_checkpoint("detector", config.detector_checkpoint)
        _require_checkpoint("detector config", config.detector_config)
        _require_checkpoint("scorer", config.scorer_checkpoint)
        try:
            import torch
            from groundingdino.util.inference import load_model as load_dino
            from segment_anything import SamPredictor, sam_model_registry
            import open_clip
        except ImportError as exc:
            raise ModelLoadError(
                f"model dependencies missing (install the 'models' extra): {exc}"
            ) from exc

        self._torch = torch
        self.device = config.device
        self.detector_threshold = config.detector_threshold
        torch.manual_seed(0)
        torch.use_deterministic_algorithms(True, warn_only=True)

        try:
            sam = sam_model_registry["vit_h"](checkpoint=str(config.segmenter_checkpoint))
            sam.to(self.device).eval()
            self._predictor = SamPredictor(sam)
            self._detector = load_dino(
                str(config.detector_config), str(config.detector_checkpoint)
            )
            self._detector.to(self.device).eval()
            self._clip, _, self._clip_preprocess = open_clip.create_model_and_transforms(
                "ViT-L-14", pretrained=str(config.scorer_checkpoint)
            )
            self._clip.to(self.device).eval()
            self._tokenizer = open_clip.get_tokenizer("ViT-L-14")
        except Exception as exc:
            raise ModelLoadError(f"model initialization failed: {exc}") from exc

    def _best_mask(self, masks: np.ndarray, scores: np.ndarray) -> np.ndarray:
        # The segmenter proposes several masks per prompt; serve the one
        # with the highest predicted quality score.
        return masks[int(np.argmax(scores))].astype(bool)

    def segment_point(self, image: np.ndarray, x: int, y: int) -> np.ndarray:
        with self._torch.inference_mode():
            self._predictor.set_image(image)
            masks, scores, _ = self._predictor.predict(
                point_coords=np.array([[x, y]], dtype=np.float64),
                point_labels=np.array([1]),
                multimask_output=True,
            )
        return self._best_mask(masks, scores)

    def segment_box(
        self, image: np.ndarray, x_min: int, y_min: int, x_max: int, y_max: int
    ) -> np.ndarray:
        with self._torch.inference_mode():
            self._predictor.set_image(image)
            masks, scores, _ = self._predictor.predict(
                box=np.array([x_min, y_min, x_max, y_max], dtype=np.float64),
                multimask_output=True,
            )
        return self._best_mask(masks, scores)

    def detect(self, image: np.ndarray, text: str) -> List[dict]:
        from groundingdino.util.inference import predict as dino_predict
        import groundingdino.datasets.transforms as dino_transforms
        from PIL import Image

        transform = dino_transforms.Compose(
            [
                dino_transforms.RandomResize([800], max_size=1333),
                dino_transforms.ToTensor(),
                dino_transforms.Normalize([0.485, 0.456, 0.406], [0.229, 0.224, 0.225]),
            ]
        )
        tensor, _ = transform(Image.fromarray(image), None)
        with self._torch.inference_mode():
            boxes, logits, _ = dino_predict(
                model=self._detector,
                image=tensor,
                caption=text,
                box_threshold=self.detector_threshold,
                text_threshold=self.detector_threshold,
                device=self.device,
            )
        h, w = image.shape[:2]
        out = []
        for (cx, cy, bw, bh), confidence in zip(boxes.tolist(), logits.tolist()):
            x_min = max(0, int(round((cx - bw / 2) * w)))
            y_min = max(0, int(round((cy - bh / 2) * h)))
            x_max = min(w - 1, int(round((cx + bw / 2) * w)))
            y_max = min(h - 1, int(round((cy + bh / 2) * h)))
            if x_min > x_max or y_min > y_max:
                continue
            out.append(
                {
                    "x_min": x_min,
                    "y_min": y_min,
                    "x_max": x_max,
                    "y_max": y_max,
                    "confidence": float(confidence),
                }
            )
        return out

    def score(self, image: np.ndarray, text: str) -> float:
        from PIL import Image

        pixels = self._clip_preprocess(Image.fromarray(image)).unsqueeze(0).to(self.device)
        tokens = self._tokenizer([text]).to(self.device)
        with self._torch.inference_mode():
            image_emb = self._clip.encode_image(pixels)
            text_emb = self._clip.encode_text(tokens)
            image_emb = image_emb / image_emb.norm(dim=-1, keepdim=True)
            text_emb = text_emb / text_emb.norm(dim=-1, keepdim=True)
            similarity = (image_emb * text_emb).sum()
        return float(similarity.item())

    def info(self) -> Dict[str, str]:
        return {
            "segmenter": "sam_vit_h",
            "detector": "grounding_dino_swin_b",
            "scorer": "clip_vit_l",
        }
