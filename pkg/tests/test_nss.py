from __future__ import annotations

import numpy as np
import pytest
from oracles import brute_force_dilate, label_components_two_pass

from pointsal.imaging import BG, FG, UNCERTAIN, BinaryMask, GrayMap, Point
from pointsal.nss import (
    NssParams,
    build_second_round_label,
    dropped_seeds,
    extract_seeded_components,
    nss_pipeline,
    suppression_report,
)


def blob_map(h, w, blobs, high=0.9, low=0.1):
    """Saliency map with rectangular blobs above threshold."""
    m = np.full((h, w), low)
    for (y0, y1, x0, x1) in blobs:
        m[y0:y1, x0:x1] = high
    return GrayMap(m)


def random_blob_instance(rng, h=48, w=48, max_blobs=5):
    """Random disjoint rectangle blobs; returns (map, blob boxes)."""
    blobs = []
    occupied = np.zeros((h, w), dtype=bool)
    for _ in range(int(rng.integers(1, max_blobs + 1))):
        for _attempt in range(20):
            bh, bw = int(rng.integers(4, 10)), int(rng.integers(4, 10))
            y0 = int(rng.integers(0, h - bh))
            x0 = int(rng.integers(0, w - bw))
            # Keep blobs separated so components stay distinct.
            pad = occupied[max(0, y0 - 1) : y0 + bh + 1, max(0, x0 - 1) : x0 + bw + 1]
            if not pad.any():
                occupied[y0 : y0 + bh, x0 : x0 + bw] = True
                blobs.append((y0, y0 + bh, x0, x0 + bw))
                break
    return blob_map(h, w, blobs), blobs


class TestExtractSeededComponents:
    def test_single_seeded_blob_kept(self):
        sal = blob_map(32, 32, [(4, 10, 4, 10), (20, 28, 18, 30)])
        out = extract_seeded_components(sal, [Point(6, 6)], NssParams())
        expected = np.zeros((32, 32), dtype=bool)
        expected[4:10, 4:10] = True
        assert np.array_equal(out.bits, expected)

    def test_all_zero_saliency_empty(self):
        out = extract_seeded_components(GrayMap(np.zeros((16, 16))), [Point(3, 3)], NssParams())
        assert out.count() == 0

    def test_matches_component_labeling_oracle(self):
        rng = np.random.default_rng(50)
        params = NssParams()
        for _ in range(30):
            sal, blobs = random_blob_instance(rng)
            if not blobs:
                continue
            k = int(rng.integers(1, len(blobs) + 1))
            chosen = list(rng.choice(len(blobs), size=k, replace=False))
            seeds = []
            for bi in chosen:
                y0, y1, x0, x1 = blobs[bi]
                seeds.append(Point(int(rng.integers(x0, x1)), int(rng.integers(y0, y1))))
            out = extract_seeded_components(sal, seeds, params)
            labels = label_components_two_pass(sal.values > params.saliency_threshold)
            keep = {labels[p.y, p.x] for p in seeds if labels[p.y, p.x] != 0}
            expected = np.isin(labels, sorted(keep)) & (labels != 0)
            assert np.array_equal(out.bits, expected)

    def test_sub_threshold_seed_contributes_nothing(self):
        sal = blob_map(16, 16, [(2, 6, 2, 6)])
        out = extract_seeded_components(sal, [Point(12, 12)], NssParams())
        assert out.count() == 0
        assert dropped_seeds(sal, [Point(12, 12), Point(3, 3)], NssParams()) == [Point(12, 12)]

    def test_out_of_bounds_point(self):
        sal = GrayMap(np.zeros((8, 8)))
        with pytest.raises(ValueError):
            extract_seeded_components(sal, [Point(9, 1)], NssParams())


class TestBuildSecondRoundLabel:
    def test_empty_input_all_background(self):
        tri = build_second_round_label(BinaryMask(np.zeros((12, 12), dtype=bool)), NssParams())
        assert (tri.labels == BG).all()

    def test_square_blob_gets_exact_halo(self):
        bits = np.zeros((64, 64), dtype=bool)
        bits[20:30, 24:34] = True
        params = NssParams(dilation_radius=5)
        tri = build_second_round_label(BinaryMask(bits), params)
        grown = brute_force_dilate(bits, 11)
        assert np.array_equal(tri.labels == FG, bits)
        assert np.array_equal(tri.labels == UNCERTAIN, grown & ~bits)
        assert np.array_equal(tri.labels == BG, ~grown)

    def test_border_clipping_keeps_partition(self):
        bits = np.zeros((20, 20), dtype=bool)
        bits[0:4, 0:4] = True
        tri = build_second_round_label(BinaryMask(bits), NssParams(dilation_radius=5))
        codes, counts = np.unique(tri.labels, return_counts=True)
        assert counts.sum() == 400
        assert set(codes.tolist()) <= {BG, UNCERTAIN, FG}

    def test_zero_radius_has_no_halo(self):
        bits = np.zeros((10, 10), dtype=bool)
        bits[4:6, 4:6] = True
        tri = build_second_round_label(BinaryMask(bits), NssParams(dilation_radius=0))
        assert (tri.labels == UNCERTAIN).sum() == 0


class TestPipeline:
    def test_distractor_excluded(self):
        sal = blob_map(48, 48, [(4, 14, 4, 14), (30, 42, 28, 44)])
        from pointsal.floodfill import PointAnnotation

        ann = PointAnnotation("a", [Point(8, 8)], Point(46, 2))
        tri = nss_pipeline(sal, ann, NssParams())
        fg = tri.labels == FG
        assert fg[4:14, 4:14].all()
        assert not fg[30:42, 28:44].any()

    def test_all_ones_map_degenerates_to_all_fg(self):
        from pointsal.floodfill import PointAnnotation

        sal = GrayMap(np.ones((24, 24)))
        ann = PointAnnotation("a", [Point(5, 5)], Point(20, 20))
        tri = nss_pipeline(sal, ann, NssParams())
        assert (tri.labels == FG).all()

    def test_suppression_soundness_and_seed_preservation(self):
        rng = np.random.default_rng(51)
        params = NssParams()
        for _ in range(25):
            sal, blobs = random_blob_instance(rng)
            if len(blobs) < 2:
                continue
            y0, y1, x0, x1 = blobs[0]
            seeds = [Point(int(rng.integers(x0, x1)), int(rng.integers(y0, y1)))]
            out = extract_seeded_components(sal, seeds, params)
            labels = label_components_two_pass(sal.values > params.saliency_threshold)
            seed_labels = {labels[p.y, p.x] for p in seeds}
            # Soundness: no kept pixel lies in an unseeded component.
            kept_labels = set(np.unique(labels[out.bits]).tolist())
            assert kept_labels <= seed_labels
            # Preservation: every above-threshold seed is in the output.
            for p in seeds:
                if sal.values[p.y, p.x] > params.saliency_threshold:
                    assert out.bits[p.y, p.x]

    def test_adding_seed_never_shrinks_fg(self):
        rng = np.random.default_rng(52)
        sal, blobs = random_blob_instance(rng, max_blobs=5)
        params = NssParams()
        seeds: list[Point] = []
        prev = np.zeros(sal.values.shape, dtype=bool)
        for (y0, y1, x0, x1) in blobs:
            seeds.append(Point((x0 + x1) // 2, (y0 + y1) // 2))
            out = extract_seeded_components(sal, seeds, params).bits
            assert (out | prev).sum() == out.sum()
            prev = out

    def test_report_counts_components(self):
        sal = blob_map(48, 48, [(4, 14, 4, 14), (30, 42, 28, 44), (4, 10, 30, 40)])
        rep = suppression_report(sal, [Point(8, 8)], NssParams())
        assert rep.components_total == 3
        assert rep.components_kept == 1
        assert rep.components_removed == 2
        assert rep.dropped_seeds == []
