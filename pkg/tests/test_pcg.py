import numpy as np
import pytest

from camolabel.backends.interfaces import BackendError, DetectedBox
from camolabel.backends.oracle import (
    FaultPlan,
    SceneObject,
    SyntheticScene,
    oracle_backends,
)
from camolabel.core import (
    BBox,
    BinaryMask,
    PipelineParams,
    PointSet,
    Sample,
    TextTag,
    box_area_fraction,
    mask_area_fraction,
    point_in_box,
)
from camolabel.pcg import (
    generate_candidates,
    mask_erasure,
    rectify_boxes,
    regenerate_box,
    segment_point_path,
    segment_text_path,
    TextPathTrace,
)


def disk_scene(seed=0, extra_background=False):
    objects = [SceneObject(shape="disk", x=48, y=40, size=(12,), tag="crab")]
    if extra_background:
        objects.append(
            SceneObject(shape="disk", x=12, y=80, size=(8,), tag="crab", is_camouflaged=False)
        )
    return SyntheticScene(width=96, height=96, objects=tuple(objects), seed=seed)


def make_sample(scene, tag="crab"):
    camo = next(o for o in scene.objects if o.is_camouflaged)
    return Sample(image_ref="mem", points=PointSet([(camo.x, camo.y)]), text=TextTag(tag))


class TestRegenerateBox:
    def test_centered_box(self):
        assert regenerate_box((50, 50), 100, 100, 0.20) == BBox(30, 30, 70, 70)

    def test_clamped_at_border(self):
        assert regenerate_box((5, 5), 100, 100, 0.20) == BBox(0, 0, 25, 25)

    def test_small_beta_degenerates_to_point(self):
        box = regenerate_box((50, 50), 100, 100, 1e-6)
        assert box == BBox(50, 50, 50, 50)

    def test_point_outside_image_rejected(self):
        with pytest.raises(ValueError):
            regenerate_box((100, 50), 100, 100, 0.20)

    def test_always_contains_point(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            w, h = rng.integers(4, 200, 2)
            x, y = rng.integers(0, w), rng.integers(0, h)
            beta = rng.uniform(0.01, 1.0)
            assert point_in_box((x, y), regenerate_box((x, y), w, h, beta))


class TestRectifyBoxes:
    def test_full_image_box_replaced_by_regeneration(self):
        dets = [DetectedBox(box=BBox(0, 0, 99, 99), confidence=0.9)]
        out = rectify_boxes(dets, PointSet([(50, 50)]), 100, 100, 0.95, 0.20)
        assert out == [BBox(30, 30, 70, 70)]

    def test_compliant_box_kept_unchanged(self):
        dets = [DetectedBox(box=BBox(10, 10, 40, 40), confidence=0.5)]
        out = rectify_boxes(dets, PointSet([(20, 20)]), 100, 100, 0.95, 0.20)
        assert out == [BBox(10, 10, 40, 40)]

    def test_pointless_box_dropped_and_point_regenerated(self):
        dets = [DetectedBox(box=BBox(60, 60, 90, 90), confidence=0.9)]
        out = rectify_boxes(dets, PointSet([(20, 20)]), 100, 100, 0.95, 0.20)
        assert out == [BBox(0, 0, 40, 40)]

    def test_output_order_survivors_then_regenerated(self):
        dets = [
            DetectedBox(box=BBox(0, 0, 99, 99), confidence=0.9),  # too large
            DetectedBox(box=BBox(10, 10, 30, 30), confidence=0.8),  # keeps point A
        ]
        points = PointSet([(20, 20), (80, 80)])
        out = rectify_boxes(dets, points, 100, 100, 0.95, 0.20)
        assert out[0] == BBox(10, 10, 30, 30)
        assert point_in_box((80, 80), out[1])

    def test_every_point_covered_and_alpha_respected(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            w, h = (int(v) for v in rng.integers(16, 128, 2))
            points = PointSet(
                [(int(rng.integers(0, w)), int(rng.integers(0, h))) for _ in range(rng.integers(1, 4))]
            )
            dets = []
            for _ in range(rng.integers(0, 5)):
                x0, x1 = sorted(rng.integers(0, w, 2))
                y0, y1 = sorted(rng.integers(0, h, 2))
                dets.append(DetectedBox(box=BBox(int(x0), int(y0), int(x1), int(y1)), confidence=0.5))
            out = rectify_boxes(dets, points, w, h, 0.95, 0.20)
            for box in out:
                assert box_area_fraction(box, w, h) <= 0.95
            for p in points:
                assert any(point_in_box(p, b) for b in out)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            w, h = (int(v) for v in rng.integers(16, 128, 2))
            points = PointSet([(int(rng.integers(0, w)), int(rng.integers(0, h)))])
            x0, x1 = sorted(rng.integers(0, w, 2))
            y0, y1 = sorted(rng.integers(0, h, 2))
            dets = [DetectedBox(box=BBox(int(x0), int(y0), int(x1), int(y1)), confidence=0.5)]
            once = rectify_boxes(dets, points, w, h, 0.95, 0.20)
            again = rectify_boxes(
                [DetectedBox(box=b, confidence=1.0) for b in once], points, w, h, 0.95, 0.20
            )
            assert once == again


class TestSegmentPointPath:
    def test_single_disk_recovered_exactly(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        mask = segment_point_path(scene.render(), PointSet([(48, 40)]), backends.point_segmenter)
        assert np.array_equal(mask.data, scene.object_mask(0).data)

    def test_two_objects_union(self):
        objects = (
            SceneObject(shape="disk", x=20, y=20, size=(8,), tag="crab"),
            SceneObject(shape="rectangle", x=70, y=70, size=(10, 6), tag="crab"),
        )
        scene = SyntheticScene(width=96, height=96, objects=objects, seed=1)
        backends = oracle_backends(scene)
        mask = segment_point_path(
            scene.render(), PointSet([(20, 20), (70, 70)]), backends.point_segmenter
        )
        expected = scene.object_mask(0).data | scene.object_mask(1).data
        assert np.array_equal(mask.data, expected)

    def test_empty_backend_mask_is_identity_under_or(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        # (5, 5) hits no object: empty contribution, no error.
        mask = segment_point_path(scene.render(), PointSet([(48, 40), (5, 5)]), backends.point_segmenter)
        assert np.array_equal(mask.data, scene.object_mask(0).data)

    def test_backend_failure_names_point_index(self):
        class Broken:
            def segment_point(self, image, point):
                raise RuntimeError("boom")

        scene = disk_scene()
        with pytest.raises(BackendError, match="point 0"):
            segment_point_path(scene.render(), PointSet([(48, 40)]), Broken())


class TestMaskErasure:
    def test_small_mask_unchanged(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        small = scene.object_mask(0)  # ~5% of the canvas
        out = mask_erasure(small, scene.render(), PointSet([(48, 40)]), 0.80, 0.20, backends.box_segmenter)
        assert out is small

    def test_threshold_is_inclusive(self):
        # Exactly delta must trigger regeneration.
        scene = SyntheticScene(
            width=100,
            height=100,
            objects=(SceneObject(shape="disk", x=48, y=40, size=(12,), tag="crab"),),
            seed=0,
        )
        backends = oracle_backends(scene)
        data = np.zeros((100, 100), dtype=bool)
        data[:80, :] = True
        assert mask_area_fraction(BinaryMask(data)) == 0.80
        trace = TextPathTrace()
        out = mask_erasure(
            BinaryMask(data), scene.render(), PointSet([(48, 40)]), 0.80, 0.20,
            backends.box_segmenter, trace,
        )
        assert trace.erasure_triggered
        assert np.array_equal(out.data, scene.object_mask(0).data)

    def test_near_full_mask_resegmented_to_object(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        full = BinaryMask(np.ones((96, 96), dtype=bool))
        out = mask_erasure(full, scene.render(), PointSet([(48, 40)]), 0.80, 0.20, backends.box_segmenter)
        assert np.array_equal(out.data, scene.object_mask(0).data)


class TestSegmentTextPath:
    def test_true_box_yields_true_mask(self):
        scene = disk_scene()
        backends = oracle_backends(scene)
        sample = make_sample(scene)
        mask = segment_text_path(
            scene.render(), sample, backends.detector, backends.box_segmenter, PipelineParams()
        )
        assert np.array_equal(mask.data, scene.camouflaged_mask().data)

    def test_zero_detections_recovered_from_points(self):
        scene = disk_scene()
        backends = oracle_backends(scene, FaultPlan(drop_detections=True))
        sample = make_sample(scene)
        trace = TextPathTrace()
        mask = segment_text_path(
            scene.render(), sample, backends.detector, backends.box_segmenter, PipelineParams(), trace
        )
        assert trace.detected_boxes == []
        assert len(trace.rectified_boxes) == 1
        assert mask.data.any()
        assert np.array_equal(mask.data, scene.camouflaged_mask().data)

    def test_background_false_positive_excluded(self):
        scene = disk_scene(extra_background=True)
        backends = oracle_backends(scene)
        sample = make_sample(scene)
        mask = segment_text_path(
            scene.render(), sample, backends.detector, backends.box_segmenter, PipelineParams()
        )
        background = scene.object_mask(1).data
        assert not (mask.data & background).any()
        assert np.array_equal(mask.data, scene.camouflaged_mask().data)


class TestGenerateCandidates:
    def test_perfect_backends_give_identical_masks(self):
        scene = disk_scene()
        sample = make_sample(scene)
        pair, _ = generate_candidates(sample, oracle_backends(scene), PipelineParams(), image=scene.render())
        assert np.array_equal(pair.point_mask.data, pair.text_mask.data)
        assert np.array_equal(pair.point_mask.data, scene.camouflaged_mask().data)

    def test_corrupted_detector_recovered_by_rectifier(self):
        scene = disk_scene()
        sample = make_sample(scene)
        pair, _ = generate_candidates(
            sample,
            oracle_backends(scene, FaultPlan(full_image_box=True)),
            PipelineParams(),
            image=scene.render(),
        )
        assert np.array_equal(pair.point_mask.data, scene.camouflaged_mask().data)
        assert np.array_equal(pair.text_mask.data, scene.camouflaged_mask().data)

    def test_deterministic(self):
        scene = disk_scene()
        sample = make_sample(scene)
        img = scene.render()
        a, _ = generate_candidates(sample, oracle_backends(scene), PipelineParams(), image=img)
        b, _ = generate_candidates(sample, oracle_backends(scene), PipelineParams(), image=img)
        assert np.array_equal(a.point_mask.data, b.point_mask.data)
        assert np.array_equal(a.text_mask.data, b.text_mask.data)

    def test_failure_names_the_path(self):
        scene = disk_scene()
        sample = make_sample(scene)
        good = oracle_backends(scene)

        class BrokenDetector:
            def detect(self, image, text):
                raise RuntimeError("down")

        from camolabel.backends.interfaces import Backends

        backends = Backends(
            point_segmenter=good.point_segmenter,
            box_segmenter=good.box_segmenter,
            detector=BrokenDetector(),
            scorer=good.scorer,
        )
        with pytest.raises(BackendError, match="text path"):
            generate_candidates(sample, backends, PipelineParams(), image=scene.render())
