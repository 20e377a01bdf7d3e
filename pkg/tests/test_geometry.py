import random

import pytest

from tubekit.geometry import (Box, Segment, Tube, VideoAnnotation, VideoMeta,
                              box_area, box_iou, segment_iou, tube_st_iou,
                              union_box)
from tubekit.oracles import oracle_iou_grid, oracle_tube_st_iou


def random_grid_box(rng, pitch=0.5, extent=40):
    steps = int(extent / pitch)
    x1 = rng.randrange(steps - 1) * pitch
    y1 = rng.randrange(steps - 1) * pitch
    x2 = x1 + rng.randrange(1, steps - int(x1 / pitch)) * pitch
    y2 = y1 + rng.randrange(1, steps - int(y1 / pitch)) * pitch
    return Box(x1, y1, x2, y2)


def random_tube(rng, num_frames=32, class_id=0):
    length = rng.randint(1, num_frames // 2)
    start = rng.randint(0, num_frames - length)
    boxes = tuple(random_grid_box(rng) for _ in range(length))
    return Tube(class_id, 1.0, Segment(start, start + length), boxes)


class TestConstruction:
    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            Box(0, 0, 0, 10)
        with pytest.raises(ValueError):
            Box(5, 0, 5, 10)
        with pytest.raises(ValueError):
            Box(0, 3, 10, 3)
        with pytest.raises(ValueError):
            Box(0, 0, float("nan"), 10)
        with pytest.raises(ValueError):
            Box(0, 0, float("inf"), 10)

    def test_segment_invariants(self):
        with pytest.raises(ValueError):
            Segment(5, 5)
        with pytest.raises(ValueError):
            Segment(-1, 4)
        with pytest.raises(ValueError):
            Segment(7, 3)
        assert Segment(0, 1).length == 1

    def test_tube_box_count_must_match_segment(self):
        seg = Segment(0, 3)
        boxes = (Box(0, 0, 1, 1),) * 2
        with pytest.raises(ValueError):
            Tube(0, 1.0, seg, boxes)

    def test_video_meta_validation(self):
        with pytest.raises(ValueError):
            VideoMeta("", 10, 320, 240, 12.0)
        with pytest.raises(ValueError):
            VideoMeta("v", 0, 320, 240, 12.0)
        with pytest.raises(ValueError):
            VideoMeta("v", 10, 320, 240, 0.0)

    def test_annotation_rejects_out_of_range_tube(self):
        meta = VideoMeta("v", 10, 320, 240, 12.0)
        tube = Tube(0, 1.0, Segment(5, 12), (Box(0, 0, 1, 1),) * 7)
        with pytest.raises(ValueError):
            VideoAnnotation(meta, (tube,))


class TestBoxArea:
    def test_examples(self):
        assert box_area(Box(0, 0, 10, 10)) == 100
        assert box_area(Box(0, 0, 1, 1)) == 1

    def test_fractional_box_against_grid_count(self):
        # 5x4 box on a 0.01-pitch raster: 500 * 400 cells.
        b = Box(2.5, 0, 7.5, 4)
        cells = 0
        for i in range(1000):
            x = (i + 0.5) * 0.01
            if 2.5 < x < 7.5:
                cells += 400
        assert cells * 0.01 * 0.01 == pytest.approx(20, abs=1e-9)
        assert box_area(b) == 20


class TestBoxIoU:
    def test_identity(self):
        b = Box(3, 4, 17, 21)
        assert box_iou(b, b) == 1.0

    def test_disjoint(self):
        assert box_iou(Box(0, 0, 10, 10), Box(20, 20, 30, 30)) == 0.0

    def test_half_overlap_thirds(self):
        a = Box(0, 0, 10, 10)
        b = Box(5, 0, 15, 10)
        assert oracle_iou_grid(a, b, pitch=0.5) == pytest.approx(1 / 3, abs=1e-12)
        assert box_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)

    def test_matches_grid_oracle_on_random_pairs(self):
        rng = random.Random(20240601)
        for _ in range(300):
            a = random_grid_box(rng)
            b = random_grid_box(rng)
            assert abs(box_iou(a, b) - oracle_iou_grid(a, b, 0.5)) < 1e-6

    def test_symmetry_and_range(self):
        rng = random.Random(7)
        for _ in range(200):
            a = random_grid_box(rng)
            b = random_grid_box(rng)
            iou = box_iou(a, b)
            assert iou == box_iou(b, a)
            assert 0.0 <= iou <= 1.0
            if a != b:
                assert iou < 1.0


class TestSegmentIoU:
    def test_identity(self):
        s = Segment(4, 19)
        assert segment_iou(s, s) == 1.0

    def test_abutting_half_open_is_disjoint(self):
        assert segment_iou(Segment(0, 10), Segment(10, 20)) == 0.0

    def test_partial_overlap_by_frame_enumeration(self):
        a, b = Segment(10, 20), Segment(15, 25)
        frames_a, frames_b = set(range(10, 20)), set(range(15, 25))
        expected = len(frames_a & frames_b) / len(frames_a | frames_b)
        assert expected == pytest.approx(1 / 3, abs=1e-12)
        assert segment_iou(a, b) == expected

    def test_symmetry_and_range(self):
        rng = random.Random(11)
        for _ in range(300):
            a = Segment(rng.randint(0, 30), rng.randint(31, 60))
            b = Segment(rng.randint(0, 30), rng.randint(31, 60))
            iou = segment_iou(a, b)
            assert iou == segment_iou(b, a)
            assert 0.0 <= iou <= 1.0
            assert (iou == 1.0) == (a == b)


class TestTubeSTIoU:
    def test_identity(self):
        rng = random.Random(3)
        t = random_tube(rng)
        assert tube_st_iou(t, t) == 1.0

    def test_disjoint_segments_give_zero(self):
        a = Tube(0, 1.0, Segment(0, 5), (Box(0, 0, 10, 10),) * 5)
        b = Tube(0, 1.0, Segment(5, 10), (Box(0, 0, 10, 10),) * 5)
        assert tube_st_iou(a, b) == 0.0

    def test_constant_box_shifted_segment(self):
        box = Box(0, 0, 10, 10)
        a = Tube(0, 1.0, Segment(0, 10), (box,) * 10)
        b = Tube(0, 1.0, Segment(5, 15), (box,) * 10)
        assert oracle_tube_st_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)
        assert tube_st_iou(a, b) == oracle_tube_st_iou(a, b)

    def test_matches_enumeration_oracle_exactly(self):
        rng = random.Random(20240602)
        for _ in range(200):
            a = random_tube(rng)
            b = random_tube(rng)
            assert tube_st_iou(a, b) == oracle_tube_st_iou(a, b)

    def test_bounded_by_temporal_iou(self):
        rng = random.Random(13)
        for _ in range(200):
            a = random_tube(rng)
            b = random_tube(rng)
            assert tube_st_iou(a, b) <= segment_iou(a.segment, b.segment) + 1e-12


class TestUnionBox:
    def test_singleton(self):
        b = Box(0, 0, 10, 10)
        assert union_box([b]) == b

    def test_pair(self):
        assert union_box([Box(0, 0, 10, 10), Box(5, 5, 20, 20)]) == Box(0, 0, 20, 20)

    def test_triple_by_corner_membership(self):
        boxes = [Box(3, 1, 4, 2), Box(0, 5, 1, 6), Box(7, 0, 8, 9)]
        env = union_box(boxes)
        for b in boxes:
            for x in (b.x1, b.x2):
                for y in (b.y1, b.y2):
                    assert env.x1 <= x <= env.x2 and env.y1 <= y <= env.y2
        assert env == Box(0, 0, 8, 9)

    def test_contains_every_input(self):
        rng = random.Random(5)
        for _ in range(100):
            boxes = [random_grid_box(rng) for _ in range(rng.randint(1, 6))]
            env = union_box(boxes)
            for b in boxes:
                assert env.x1 <= b.x1 and env.y1 <= b.y1
                assert env.x2 >= b.x2 and env.y2 >= b.y2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            union_box([])
