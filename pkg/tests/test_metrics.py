from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from oracles import s_measure_reference

from pointsal.imaging import BinaryMask, GrayMap, save_gray, save_mask
from pointsal.metrics import (
    MetricOptions,
    PrCurve,
    adaptive_f_measure,
    evaluate_dataset,
    f_measure,
    mae,
    pr_curve,
    s_measure,
)

GOLDEN = Path(__file__).parent / "golden" / "mini_eval.json"


def binary_gray(bits: np.ndarray) -> GrayMap:
    return GrayMap(bits.astype(np.float64))


class TestPrCurve:
    def test_perfect_prediction(self):
        rng = np.random.default_rng(90)
        gt = rng.random((12, 12)) > 0.6
        pr = pr_curve(binary_gray(gt), BinaryMask(gt))
        # Strictly below 1.0 every threshold keeps the exact positives.
        assert (pr.precision[:-1] == 1.0).all()
        assert (pr.recall[:-1] == 1.0).all()

    def test_all_zero_prediction_has_zero_recall(self):
        gt = np.zeros((8, 8), dtype=bool)
        gt[2:5, 2:5] = True
        pr = pr_curve(GrayMap(np.zeros((8, 8))), BinaryMask(gt))
        assert (pr.recall == 0.0).all()

    def test_hand_counted_2x2(self):
        gt = BinaryMask(np.array([[True, False], [False, False]]))
        pred = GrayMap(np.array([[0.9, 0.6], [0.1, 0.1]]))
        pr = pr_curve(pred, gt)
        # Thresholds straddling 0.5: exact hand count TP=1, FP=1, FN=0.
        for k in (127, 128):
            assert pr.precision[k - 1] == 0.5
            assert pr.recall[k - 1] == 1.0

    def test_recall_non_increasing(self):
        rng = np.random.default_rng(91)
        for _ in range(10):
            pred = GrayMap(rng.random((10, 10)))
            gt = BinaryMask(rng.random((10, 10)) > 0.5)
            pr = pr_curve(pred, gt)
            assert (np.diff(pr.recall) <= 0).all()

    def test_empty_gt_conventions(self):
        pred = GrayMap(np.full((6, 6), 0.7))
        gt = BinaryMask(np.zeros((6, 6), dtype=bool))
        pr = pr_curve(pred, gt, normalize=False)
        assert (pr.recall == 1.0).all()
        assert not np.isnan(pr.precision).any()

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            pr_curve(GrayMap(np.zeros((3, 3))), BinaryMask(np.zeros((4, 3), dtype=bool)))


class TestFMeasure:
    def test_perfect_curve(self):
        pr = PrCurve(np.arange(1, 256) / 255.0, np.ones(255), np.ones(255))
        fmax, fmean = f_measure(pr, 0.3)
        assert fmax == 1.0 and fmean == 1.0

    def test_single_point_formula(self):
        # Direct evaluation of (1+b)PR/(bP+R) at P=0.5, R=1, b=0.3.
        pr = PrCurve(np.arange(1, 256) / 255.0, np.full(255, 0.5), np.ones(255))
        fmax, fmean = f_measure(pr, 0.3)
        assert fmax == pytest.approx(0.65 / 1.15)
        assert fmean == pytest.approx(0.65 / 1.15)

    def test_zero_recall_gives_zero(self):
        pr = PrCurve(np.arange(1, 256) / 255.0, np.ones(255), np.zeros(255))
        fmax, _ = f_measure(pr, 0.3)
        assert fmax == 0.0

    def test_fmax_at_least_fmean_randomized(self):
        rng = np.random.default_rng(92)
        for _ in range(100):
            pred = GrayMap(rng.random((8, 8)))
            gt = BinaryMask(rng.random((8, 8)) > rng.uniform(0.2, 0.8))
            fmax, fmean = f_measure(pr_curve(pred, gt), 0.3)
            assert fmax >= fmean

    def test_adaptive_mode_runs(self):
        rng = np.random.default_rng(93)
        pred = GrayMap(rng.random((12, 12)))
        gt = BinaryMask(rng.random((12, 12)) > 0.5)
        val = adaptive_f_measure(pred, gt)
        assert 0.0 <= val <= 1.0


class TestMae:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(94)
        gt = rng.random((9, 9)) > 0.5
        assert mae(binary_gray(gt), BinaryMask(gt)) == 0.0

    def test_opposite_is_one(self):
        gt = np.zeros((5, 5), dtype=bool)
        assert mae(GrayMap(np.ones((5, 5))), BinaryMask(gt)) == 1.0

    def test_closed_form(self):
        gt = np.zeros((4, 4), dtype=bool)
        gt[:2] = True
        assert mae(GrayMap(np.full((4, 4), 0.25)), BinaryMask(gt)) == pytest.approx(0.5)

    def test_complement_symmetry(self):
        rng = np.random.default_rng(95)
        pred = rng.random((10, 10))
        gt = rng.random((10, 10)) > 0.5
        a = mae(GrayMap(pred), BinaryMask(gt))
        b = mae(GrayMap(1.0 - pred), BinaryMask(~gt))
        assert a == pytest.approx(b, abs=1e-15)


class TestSMeasure:
    def test_self_similarity(self):
        rng = np.random.default_rng(96)
        gt = rng.random((16, 16)) > 0.6
        if not gt.any():
            gt[3, 3] = True
        assert s_measure(binary_gray(gt), BinaryMask(gt)) == pytest.approx(1.0, abs=1e-6)

    def test_inverted_scores_lower(self):
        rng = np.random.default_rng(97)
        gt = rng.random((16, 16)) > 0.5
        good = s_measure(binary_gray(gt), BinaryMask(gt))
        bad = s_measure(binary_gray(~gt), BinaryMask(gt))
        assert bad < good

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(98)
        for _ in range(12):
            pred = rng.random((8, 8))
            gt = rng.random((8, 8)) > rng.uniform(0.2, 0.8)
            ours = s_measure(GrayMap(pred), BinaryMask(gt))
            ref = s_measure_reference(pred, gt)
            assert ours == pytest.approx(ref, abs=1e-6)

    def test_degenerate_ground_truths(self):
        pred = GrayMap(np.full((6, 6), 0.3))
        empty = BinaryMask(np.zeros((6, 6), dtype=bool))
        full = BinaryMask(np.ones((6, 6), dtype=bool))
        assert s_measure(pred, empty) == pytest.approx(0.7)
        assert s_measure(pred, full) == pytest.approx(0.3)
        assert not np.isnan(s_measure(pred, empty))


class TestEvaluateDataset:
    def _write_pair(self, pred_dir, gt_dir, stem, pred, gt):
        save_gray(GrayMap(pred), pred_dir / f"{stem}.png")
        save_mask(BinaryMask(gt), gt_dir / f"{stem}.png")

    def test_single_image_matches_per_image(self, tmp_path):
        pred_dir = tmp_path / "pred"
        gt_dir = tmp_path / "gt"
        pred_dir.mkdir(), gt_dir.mkdir()
        rng = np.random.default_rng(99)
        gt = rng.random((16, 16)) > 0.5
        pred = np.round(rng.random((16, 16)) * 255) / 255
        self._write_pair(pred_dir, gt_dir, "a", pred, gt)
        res = evaluate_dataset(pred_dir, gt_dir)
        assert len(res.per_image) == 1
        rec = res.per_image[0]
        assert res.f_max == pytest.approx(rec.f_max)
        assert res.mae == pytest.approx(rec.mae)
        assert res.s_measure == pytest.approx(rec.s_measure)

    def test_mae_means_across_images(self, tmp_path):
        pred_dir = tmp_path / "pred"
        gt_dir = tmp_path / "gt"
        pred_dir.mkdir(), gt_dir.mkdir()
        gt = np.zeros((10, 10), dtype=bool)
        self._write_pair(pred_dir, gt_dir, "a", np.full((10, 10), 0.1), gt)
        self._write_pair(pred_dir, gt_dir, "b", np.full((10, 10), 0.3), gt)
        res = evaluate_dataset(pred_dir, gt_dir)
        assert res.mae == pytest.approx(0.2)

    def test_pred_equals_gt(self, tmp_path):
        pred_dir = tmp_path / "pred"
        gt_dir = tmp_path / "gt"
        pred_dir.mkdir(), gt_dir.mkdir()
        rng = np.random.default_rng(100)
        for stem in ("a", "b"):
            gt = rng.random((20, 20)) > 0.6
            gt[4:9, 4:9] = True
            self._write_pair(pred_dir, gt_dir, stem, gt.astype(np.float64), gt)
        res = evaluate_dataset(pred_dir, gt_dir)
        assert res.f_max == 1.0
        assert res.mae == 0.0
        assert res.s_measure >= 0.999

    def test_mismatched_dirs_reported_not_fatal(self, tmp_path):
        pred_dir = tmp_path / "pred"
        gt_dir = tmp_path / "gt"
        pred_dir.mkdir(), gt_dir.mkdir()
        gt = np.zeros((6, 6), dtype=bool)
        self._write_pair(pred_dir, gt_dir, "both", np.zeros((6, 6)), gt)
        save_gray(GrayMap(np.zeros((6, 6))), pred_dir / "pred_only.png")
        save_mask(BinaryMask(gt), gt_dir / "gt_only.png")
        res = evaluate_dataset(pred_dir, gt_dir)
        reasons = {e["stem"]: e["reason"] for e in res.skipped}
        assert reasons == {
            "pred_only": "missing ground truth",
            "gt_only": "missing prediction",
        }
        assert [r.stem for r in res.per_image] == ["both"]

    def test_golden_mini_fixture(self, mini_copy):
        round1 = mini_copy.images_dir.parent / "round1"
        res1 = evaluate_dataset(round1, mini_copy.gt_dir)
        res2 = evaluate_dataset(round1, mini_copy.gt_dir)
        # Bit-stable across runs.
        assert res1.to_dict() == res2.to_dict()
        assert np.array_equal(res1.pr.precision, res2.pr.precision)
        golden = json.loads(GOLDEN.read_text())
        for key in ("f_max", "f_mean", "mae", "s_measure"):
            assert getattr(res1, key) == pytest.approx(golden[key], abs=1e-9)
        for rec, grec in zip(res1.per_image, golden["per_image"]):
            assert rec.stem == grec["stem"]
            assert rec.mae == pytest.approx(grec["mae"], abs=1e-9)
            assert rec.s_measure == pytest.approx(grec["s_measure"], abs=1e-9)
