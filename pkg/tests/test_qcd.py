import numpy as np
import pytest

from camolabel.backends.interfaces import BackendError
from camolabel.backends.oracle import SceneObject, SyntheticScene, oracle_backends
from camolabel.core import BinaryMask, CandidatePair, ImageBuffer, PipelineParams, TextTag
from camolabel.qcd import (
    SelectionRecord,
    choose_mask,
    cosine_similarity,
    gaussian_blur,
    reverse_blur_prompt,
)


def noisy_image(seed=0, h=48, w=48):
    rng = np.random.default_rng(seed)
    return ImageBuffer(rng.integers(0, 256, (h, w, 3)).astype(np.uint8))


def disk_scene(seed=0):
    objects = (SceneObject(shape="disk", x=48, y=40, size=(12,), tag="crab"),)
    return SyntheticScene(width=96, height=96, objects=objects, seed=seed)


class TestGaussianBlur:
    def test_constant_image_is_fixed_point(self):
        img = ImageBuffer(np.full((20, 20, 3), 77, dtype=np.uint8))
        out = gaussian_blur(img, 5.0)
        assert np.allclose(out, 77.0)

    def test_blur_preserves_mean_under_edge_clamp_constant_rows(self):
        # Rows are constant, so vertical clamping introduces no bias and
        # the row means are preserved exactly by kernel normalization.
        data = np.tile(np.full((1, 30, 3), 100, dtype=np.uint8), (10, 1, 1))
        out = gaussian_blur(ImageBuffer(data), 3.0)
        assert np.allclose(out, 100.0)

    def test_blur_smooths_noise(self):
        img = noisy_image(1, 40, 40)
        out = gaussian_blur(img, 10.0)
        assert out.std() < img.data.astype(np.float64).std() / 4


class TestReverseBlurPrompt:
    def test_inside_pixels_verbatim(self):
        img = noisy_image(2)
        mask = np.zeros((48, 48), dtype=bool)
        mask[10:20, 10:20] = True
        out = reverse_blur_prompt(img, BinaryMask(mask), 50.0)
        assert np.array_equal(out.data[mask], img.data[mask])

    def test_outside_pixels_changed(self):
        img = noisy_image(3)
        mask = np.zeros((48, 48), dtype=bool)
        mask[10:20, 10:20] = True
        out = reverse_blur_prompt(img, BinaryMask(mask), 50.0)
        outside = out.data[~mask]
        original = img.data[~mask]
        # Heavy blur of per-pixel noise changes almost every pixel value.
        changed = np.mean(np.any(outside != original, axis=-1))
        assert changed > 0.95

    def test_empty_mask_blurs_everything(self):
        img = noisy_image(4)
        mask = BinaryMask(np.zeros((48, 48), dtype=bool))
        out = reverse_blur_prompt(img, mask, 50.0)
        assert not np.array_equal(out.data, img.data)

    def test_full_mask_is_identity(self):
        img = noisy_image(5)
        mask = BinaryMask(np.ones((48, 48), dtype=bool))
        out = reverse_blur_prompt(img, mask, 50.0)
        assert np.array_equal(out.data, img.data)

    def test_dimension_mismatch_rejected(self):
        img = noisy_image(6)
        with pytest.raises(ValueError):
            reverse_blur_prompt(img, BinaryMask(np.zeros((10, 10), dtype=bool)), 50.0)

    def test_nonpositive_sigma_rejected(self):
        img = noisy_image(7)
        mask = BinaryMask(np.ones((48, 48), dtype=bool))
        with pytest.raises(ValueError):
            reverse_blur_prompt(img, mask, 0.0)

    def test_deterministic(self):
        img = noisy_image(8)
        mask = np.zeros((48, 48), dtype=bool)
        mask[5:25, 5:25] = True
        a = reverse_blur_prompt(img, BinaryMask(mask), 50.0)
        b = reverse_blur_prompt(img, BinaryMask(mask), 50.0)
        assert np.array_equal(a.data, b.data)


class TestCosineSimilarity:
    def test_parallel(self):
        assert cosine_similarity([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_opposite(self):
        assert cosine_similarity([1.0, 1.0], [-1.0, -1.0]) == pytest.approx(-1.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity([0.0, 0.0], [1.0, 1.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity([1.0, 2.0], [1.0, 2.0, 3.0])


class TestChooseMask:
    def make_pair(self, scene, good_on="point"):
        gt = scene.camouflaged_mask()
        bad = BinaryMask(np.zeros(gt.data.shape, dtype=bool))
        if good_on == "point":
            return CandidatePair(point_mask=gt, text_mask=bad)
        return CandidatePair(point_mask=bad, text_mask=gt)

    def test_better_point_candidate_wins(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        chosen, record = choose_mask(
            scene.render(), self.make_pair(scene, "point"), TextTag("crab"),
            backends.scorer, PipelineParams(),
        )
        assert record.chosen_path == "point"
        assert record.score_point > record.score_text
        assert np.array_equal(chosen.data, scene.camouflaged_mask().data)

    def test_better_text_candidate_wins(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        chosen, record = choose_mask(
            scene.render(), self.make_pair(scene, "text"), TextTag("crab"),
            backends.scorer, PipelineParams(),
        )
        assert record.chosen_path == "text"
        assert np.array_equal(chosen.data, scene.camouflaged_mask().data)

    def test_tie_prefers_point(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        gt = scene.camouflaged_mask()
        pair = CandidatePair(point_mask=gt, text_mask=gt)
        _, record = choose_mask(
            scene.render(), pair, TextTag("crab"), backends.scorer, PipelineParams()
        )
        assert record.score_point == record.score_text
        assert record.chosen_path == "point"

    def test_prompt_template_applied(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        _, record = choose_mask(
            scene.render(), self.make_pair(scene), TextTag("crab"),
            backends.scorer, PipelineParams(),
        )
        assert record.prompt_used == "A crab"

    def test_custom_template(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        params = PipelineParams(prompt_template="photo of {text}")
        _, record = choose_mask(
            scene.render(), self.make_pair(scene), TextTag("crab"), backends.scorer, params
        )
        assert record.prompt_used == "photo of crab"

    def test_both_empty_emits_point_mask(self, caplog):
        scene = disk_scene()
        backends = oracle_backends(scene)
        empty = BinaryMask(np.zeros((96, 96), dtype=bool))
        pair = CandidatePair(point_mask=empty, text_mask=empty)
        with caplog.at_level("WARNING"):
            chosen, record = choose_mask(
                scene.render(), pair, TextTag("crab"), backends.scorer, PipelineParams()
            )
        assert record.chosen_path == "point"
        assert not chosen.data.any()
        assert any("empty" in r.message for r in caplog.records)

    def test_scorer_failure_names_candidate(self):
        scene = disk_scene()

        class Broken:
            def score(self, image, text):
                raise RuntimeError("down")

        with pytest.raises(BackendError, match="point candidate"):
            choose_mask(
                scene.render(), self.make_pair(scene), TextTag("crab"), Broken(), PipelineParams()
            )

    def test_record_is_plain_data(self):
        record = SelectionRecord(
            chosen_path="point", score_point=0.9, score_text=0.1, prompt_used="A crab"
        )
        assert record.chosen_path == "point"
