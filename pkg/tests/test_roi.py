from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from salroi import (
    BoundingBox,
    ConnectedRegion,
    FormatError,
    RoiConfig,
    binarize,
    compute_iou,
    compute_threshold,
    connected_components,
    decode_ppm,
    encode_ppm,
    extract_boxes,
    label_mask,
    render_overlay,
    resize_nearest,
    select_regions,
)

from oracles import flood_fill_regions, iou_by_pixel_sets, quantile_by_sort

boxes_strategy = st.builds(
    BoundingBox,
    x=st.integers(0, 20),
    y=st.integers(0, 20),
    w=st.integers(1, 10),
    h=st.integers(1, 10),
)


def assert_matches_oracle(mask, connectivity):
    regions = connected_components(mask, connectivity)
    oracle = flood_fill_regions(mask, connectivity)
    assert len(regions) == len(oracle)
    arr = np.asarray(mask, dtype=bool)
    labeled = label_mask(mask, connectivity)
    for got, want in zip(regions, oracle):
        assert got.pixel_count == want["count"]
        assert (got.bbox.x, got.bbox.y, got.bbox.w, got.bbox.h) == want["bbox"]
        # exact partition agreement: every oracle pixel carries this region's label
        assert all(labeled[r, c] == got.label for r, c in want["pixels"])
    assert sum(r.pixel_count for r in regions) == int(arr.sum())
    assert int((labeled > 0).sum()) == int(arr.sum())


class TestBoundingBox:
    def test_area(self):
        assert BoundingBox(1, 2, 3, 4).area == 12

    @pytest.mark.parametrize("x,y,w,h", [(-1, 0, 1, 1), (0, -2, 1, 1), (0, 0, 0, 1), (0, 0, 1, 0)])
    def test_invalid_rejected(self, x, y, w, h):
        with pytest.raises(ValueError):
            BoundingBox(x, y, w, h)

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError):
            BoundingBox(0.5, 0, 1, 1)


class TestBinarize:
    def test_fixed_threshold(self):
        mask = binarize(np.array([[0.0, 0.2, 0.8, 1.0]]), RoiConfig(threshold_mode="fixed", threshold=0.5))
        np.testing.assert_array_equal(mask, [[False, False, True, True]])

    def test_all_zero_map(self):
        for mode, value in (("fixed", 0.5), ("quantile", 0.9)):
            mask = binarize(np.zeros((3, 3)), RoiConfig(threshold_mode=mode, threshold=value))
            assert not mask.any()

    def test_constant_map_quantile_gives_empty_mask(self):
        mask = binarize(np.full((4, 4), 0.7), RoiConfig(threshold_mode="quantile", threshold=0.5))
        assert not mask.any()

    def test_quantile_matches_sort_oracle(self):
        rng = np.random.default_rng(42)
        values = rng.random((10, 10))
        config = RoiConfig(threshold_mode="quantile", threshold=0.9)
        tau = compute_threshold(values, config)
        oracle_tau = quantile_by_sort(values, 0.9)
        assert tau == pytest.approx(oracle_tau, abs=1e-12)
        np.testing.assert_array_equal(binarize(values, config), values > oracle_tau)

    def test_strictly_above(self):
        values = np.array([[0.2, 0.5, 0.5, 0.9]])
        mask = binarize(values, RoiConfig(threshold_mode="fixed", threshold=0.5))
        np.testing.assert_array_equal(mask, [[False, False, False, True]])

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            RoiConfig(threshold_mode="quantile", threshold=1.0)
        with pytest.raises(ValueError):
            RoiConfig(threshold_mode="fixed", threshold=1.5)
        with pytest.raises(ValueError):
            RoiConfig(connectivity=6)


class TestConnectedComponents:
    def test_empty_mask(self):
        assert connected_components(np.zeros((4, 4), dtype=bool), 8) == []

    def test_single_pixel(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 3] = True  # row 2, col 3 -> (x=3, y=2)
        regions = connected_components(mask, 4)
        assert len(regions) == 1
        region = regions[0]
        assert region.label == 1
        assert region.pixel_count == 1
        assert (region.bbox.x, region.bbox.y, region.bbox.w, region.bbox.h) == (3, 2, 1, 1)

    def test_diagonal_touch_depends_on_connectivity(self):
        # L-shaped blob in the top-left, 2x2 blob touching it only diagonally
        mask = np.array(
            [
                [1, 0, 0, 0, 0],
                [1, 0, 0, 0, 0],
                [1, 1, 0, 0, 0],
                [0, 0, 1, 1, 0],
                [0, 0, 1, 1, 0],
            ],
            dtype=bool,
        )
        assert len(connected_components(mask, 4)) == 2
        assert len(connected_components(mask, 8)) == 1
        assert_matches_oracle(mask, 4)
        assert_matches_oracle(mask, 8)

    def test_labels_in_raster_order_of_first_pixel(self):
        mask = np.array(
            [
                [0, 0, 0, 1],
                [1, 0, 0, 1],
                [1, 0, 0, 0],
            ],
            dtype=bool,
        )
        regions = connected_components(mask, 4)
        assert [r.label for r in regions] == [1, 2]
        assert regions[0].bbox.x == 3  # the region whose first pixel comes first in raster order
        assert regions[1].bbox.x == 0

    @pytest.mark.parametrize("connectivity", [4, 8])
    def test_agrees_with_flood_fill_on_random_masks(self, connectivity):
        rng = np.random.default_rng(7)
        for _ in range(40):
            mask = rng.random((16, 16)) < rng.uniform(0.2, 0.7)
            assert_matches_oracle(mask, connectivity)

    @given(hnp.arrays(bool, st.tuples(st.integers(1, 9), st.integers(1, 9))), st.sampled_from([4, 8]))
    @settings(max_examples=60, deadline=None)
    def test_oracle_agreement_property(self, mask, connectivity):
        assert_matches_oracle(mask, connectivity)

    def test_bboxes_are_tight(self):
        rng = np.random.default_rng(19)
        mask = rng.random((16, 16)) < 0.4
        for region, want in zip(connected_components(mask, 8), flood_fill_regions(mask, 8)):
            xs = {c for _, c in want["pixels"]}
            ys = {r for r, _ in want["pixels"]}
            assert region.bbox.x == min(xs) and region.bbox.x + region.bbox.w - 1 == max(xs)
            assert region.bbox.y == min(ys) and region.bbox.y + region.bbox.h - 1 == max(ys)

    def test_bad_connectivity_rejected(self):
        with pytest.raises(ValueError, match="connectivity"):
            connected_components(np.ones((2, 2), dtype=bool), 6)


def region(label, count, bbox):
    return ConnectedRegion(label=label, pixel_count=count, bbox=bbox)


class TestSelectRegions:
    def test_empty_input(self):
        assert select_regions([], RoiConfig(min_area=1)) == []

    def test_min_area_then_size_then_label(self):
        regions = [
            region(1, 5, BoundingBox(0, 0, 3, 2)),
            region(2, 9, BoundingBox(5, 5, 3, 3)),
            region(3, 9, BoundingBox(9, 9, 3, 3)),
        ]
        config = RoiConfig(min_area=6, max_boxes=2)
        assert select_regions(regions, config) == [BoundingBox(5, 5, 3, 3), BoundingBox(9, 9, 3, 3)]

    def test_all_below_min_area(self):
        regions = [region(1, 2, BoundingBox(0, 0, 2, 2))]
        assert select_regions(regions, RoiConfig(min_area=10)) == []

    def test_auto_min_area_is_half_percent(self):
        assert RoiConfig().resolve_min_area(64 * 64) == 20
        assert RoiConfig().resolve_min_area(100) == 1
        assert RoiConfig(min_area=7).resolve_min_area(64 * 64) == 7


class TestRenderOverlay:
    def test_no_boxes_leaves_image_untouched(self):
        image = np.full((8, 8, 3), 255, dtype=np.uint8)
        out = render_overlay(image, [])
        assert encode_ppm(out) == encode_ppm(image)

    def test_frame_pixel_count(self):
        image = np.full((10, 10, 3), 255, dtype=np.uint8)
        out = render_overlay(image, [BoundingBox(2, 2, 4, 4)], RoiConfig(box_thickness=1))
        changed = np.argwhere((out != image).any(axis=2))
        assert len(changed) == 12  # 4*4 - 2*2 frame cells
        for r, c in changed:
            assert tuple(out[r, c]) == (255, 0, 0)
            assert 2 <= c <= 5 and 2 <= r <= 5
            assert r in (2, 5) or c in (2, 5)

    def test_thick_frame_fills_box(self):
        image = np.zeros((10, 10, 3), dtype=np.uint8)
        out = render_overlay(image, [BoundingBox(1, 1, 4, 4)], RoiConfig(box_thickness=2))
        box = out[1:5, 1:5]
        assert (box == np.array([255, 0, 0], dtype=np.uint8)).all()

    def test_overlapping_frames_union(self):
        image = np.zeros((12, 12, 3), dtype=np.uint8)
        a = BoundingBox(0, 0, 8, 8)
        b = BoundingBox(4, 4, 8, 8)
        out = render_overlay(image, [a, b], RoiConfig(box_thickness=1, box_color=(9, 9, 9)))
        expected = np.zeros((12, 12), dtype=bool)
        for box in (a, b):
            rect = np.zeros_like(expected)
            rect[box.y : box.y + box.h, box.x : box.x + box.w] = True
            rect[box.y + 1 : box.y + box.h - 1, box.x + 1 : box.x + box.w - 1] = False
            expected |= rect
        np.testing.assert_array_equal((out != image).any(axis=2), expected)

    def test_out_of_bounds_rejected(self):
        image = np.zeros((5, 5, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="exceeds image bounds"):
            render_overlay(image, [BoundingBox(3, 3, 4, 4)])

    def test_custom_color(self):
        image = np.zeros((6, 6, 3), dtype=np.uint8)
        out = render_overlay(image, [BoundingBox(0, 0, 3, 3)], RoiConfig(box_thickness=1, box_color=(0, 128, 7)))
        assert tuple(out[0, 0]) == (0, 128, 7)


class TestComputeIou:
    def test_identical_boxes(self):
        box = BoundingBox(1, 2, 3, 4)
        assert compute_iou(box, box) == 1.0

    def test_disjoint_boxes(self):
        assert compute_iou(BoundingBox(0, 0, 2, 2), BoundingBox(5, 5, 2, 2)) == 0.0

    def test_partial_overlap_matches_pixel_oracle(self):
        a = BoundingBox(0, 0, 4, 4)
        b = BoundingBox(2, 0, 4, 4)
        assert compute_iou(a, b) == pytest.approx(1 / 3)
        assert compute_iou(a, b) == pytest.approx(iou_by_pixel_sets(a, b))

    @given(boxes_strategy, boxes_strategy)
    @settings(max_examples=80, deadline=None)
    def test_symmetric_and_matches_oracle(self, a, b):
        assert compute_iou(a, b) == compute_iou(b, a)
        assert compute_iou(a, b) == pytest.approx(iou_by_pixel_sets(a, b))

    @given(boxes_strategy, boxes_strategy)
    @settings(max_examples=80, deadline=None)
    def test_one_iff_identical(self, a, b):
        assert (compute_iou(a, b) == 1.0) == (a == b)


class TestResizeNearest:
    def test_integer_upscale_duplicates_blocks(self):
        values = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = resize_nearest(values, 4, 4)
        np.testing.assert_array_equal(
            out,
            [
                [1.0, 1.0, 2.0, 2.0],
                [1.0, 1.0, 2.0, 2.0],
                [3.0, 3.0, 4.0, 4.0],
                [3.0, 3.0, 4.0, 4.0],
            ],
        )

    def test_same_size_is_identity(self):
        values = np.arange(6, dtype=float).reshape(2, 3)
        np.testing.assert_array_equal(resize_nearest(values, 2, 3), values)

    def test_binarize_commutes_with_upscale(self):
        rng = np.random.default_rng(5)
        values = rng.random((8, 8))
        config = RoiConfig(threshold_mode="fixed", threshold=0.5)
        np.testing.assert_array_equal(
            binarize(resize_nearest(values, 16, 16), config),
            resize_nearest(binarize(values, config).astype(float), 16, 16).astype(bool),
        )


class TestExtractBoxes:
    def test_records_realized_threshold_and_min_area(self):
        rng = np.random.default_rng(13)
        values = rng.random((20, 20))
        config = RoiConfig(threshold_mode="quantile", threshold=0.85)
        extraction = extract_boxes(values, config)
        assert extraction.threshold == pytest.approx(quantile_by_sort(values, 0.85), abs=1e-12)
        assert extraction.min_area == RoiConfig().resolve_min_area(400)

    def test_boxes_come_from_selected_regions(self):
        values = np.zeros((10, 10))
        values[1:4, 1:4] = 1.0
        values[6:8, 6:8] = 1.0
        config = RoiConfig(threshold_mode="fixed", threshold=0.5, min_area=1, max_boxes=2)
        extraction = extract_boxes(values, config)
        assert extraction.boxes == (BoundingBox(1, 1, 3, 3), BoundingBox(6, 6, 2, 2))


class TestPpm:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(23)
        image = rng.integers(0, 256, (7, 5, 3), dtype=np.uint8)
        data = encode_ppm(image)
        decoded = decode_ppm(data)
        np.testing.assert_array_equal(decoded, image)
        assert encode_ppm(decoded) == data

    def test_header_comments_allowed(self):
        image = np.ones((2, 2, 3), dtype=np.uint8)
        payload = image.tobytes()
        data = b"P6\n# a comment\n2 2\n# another\n255\n" + payload
        np.testing.assert_array_equal(decode_ppm(data), image)

    def test_bad_magic_rejected(self):
        with pytest.raises(FormatError, match="bad magic"):
            decode_ppm(b"P5\n2 2\n255\n" + bytes(12))

    def test_wrong_maxval_rejected(self):
        with pytest.raises(FormatError, match="maxval"):
            decode_ppm(b"P6\n2 2\n65535\n" + bytes(12))

    def test_truncated_payload_rejected(self):
        with pytest.raises(FormatError, match=r"expected 12 bytes, got 11"):
            decode_ppm(b"P6\n2 2\n255\n" + bytes(11))

    def test_trailing_garbage_rejected(self):
        with pytest.raises(FormatError, match="length mismatch"):
            decode_ppm(b"P6\n2 2\n255\n" + bytes(13))

    def test_truncated_header_rejected(self):
        with pytest.raises(FormatError, match="truncated"):
            decode_ppm(b"P6\n2")
