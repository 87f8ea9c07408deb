"""Saliency evaluation: PR curve over 255 thresholds, max/mean F-measure,
MAE, and the structure measure, plus dataset-level aggregation."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import BinaryMask, GrayMap, load_gray, load_mask

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class MetricOptions:
    beta_sq: float = 0.3
    normalize_pred: bool = True
    mean_f_mode: str = "thresholds"  # "thresholds" | "adaptive"

    def __post_init__(self):
        if self.beta_sq <= 0:
            raise ValueError(f"beta_sq must be > 0, got {self.beta_sq}")
        if self.mean_f_mode not in ("thresholds", "adaptive"):
            raise ValueError(f"unknown mean_f_mode {self.mean_f_mode!r}")


@dataclass(frozen=True)
class PrCurve:
    thresholds: np.ndarray  # k/255 for k = 1..255
    precision: np.ndarray
    recall: np.ndarray

    def __post_init__(self):
        for name in ("thresholds", "precision", "recall"):
            a = getattr(self, name)
            if a.shape != self.thresholds.shape:
                raise ValueError("PR curve arrays must share one length")
        if ((self.precision < 0) | (self.precision > 1)).any() or (
            (self.recall < 0) | (self.recall > 1)
        ).any():
            raise ValueError("precision/recall entries must lie in [0, 1]")


@dataclass
class PerImageResult:
    stem: str
    f_max: float
    f_mean: float
    mae: float
    s_measure: float


@dataclass
class EvalResult:
    f_max: float
    f_mean: float
    mae: float
    s_measure: float
    pr: PrCurve
    per_image: list[PerImageResult] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "f_max": self.f_max,
            "f_mean": self.f_mean,
            "mae": self.mae,
            "s_measure": self.s_measure,
            "images": len(self.per_image),
            "per_image": [
                {
                    "stem": r.stem,
                    "f_max": r.f_max,
                    "f_mean": r.f_mean,
                    "mae": r.mae,
                    "s_measure": r.s_measure,
                }
                for r in self.per_image
            ],
            "skipped": self.skipped,
        }


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi > lo:
        return (values - lo) / (hi - lo)
    return values.copy()


def _check_dims(pred: GrayMap, gt: BinaryMask) -> None:
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError(
            f"prediction dims {(pred.height, pred.width)} do not match "
            f"ground truth dims {(gt.height, gt.width)}"
        )


def pr_curve(pred: GrayMap, gt: BinaryMask, normalize: bool = True) -> PrCurve:
    """Precision/recall at thresholds k/255, k=1..255, binarizing with a
    strict `value > t` test. Precision is 1 when nothing is predicted
    positive; recall is 1 when the ground truth is empty."""
    _check_dims(pred, gt)
    values = pred.values
    if normalize:
        values = minmax_normalize(values)
    thresholds = np.arange(1, 256, dtype=np.float64) / 255.0
    fg_sorted = np.sort(values[gt.bits])
    bg_sorted = np.sort(values[~gt.bits])
    n_fg, n_bg = fg_sorted.size, bg_sorted.size
    tp = n_fg - np.searchsorted(fg_sorted, thresholds, side="right")
    fp = n_bg - np.searchsorted(bg_sorted, thresholds, side="right")
    predicted = tp + fp
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 1.0)
    recall = np.full(255, 1.0) if n_fg == 0 else tp / n_fg
    return PrCurve(thresholds, precision, recall.astype(np.float64))


def f_curve(pr: PrCurve, beta_sq: float) -> np.ndarray:
    num = (1.0 + beta_sq) * pr.precision * pr.recall
    den = beta_sq * pr.precision + pr.recall
    return np.where(den > 0, num / np.maximum(den, _EPS), 0.0)


def f_measure(pr: PrCurve, beta_sq: float = 0.3) -> tuple[float, float]:
    """(max, mean) of the F curve over the 255 thresholds."""
    if beta_sq <= 0:
        raise ValueError(f"beta_sq must be > 0, got {beta_sq}")
    curve = f_curve(pr, beta_sq)
    return float(curve.max()), float(curve.mean())


def adaptive_f_measure(pred: GrayMap, gt: BinaryMask, beta_sq: float = 0.3,
                       normalize: bool = True) -> float:
    """F at the adaptive per-image threshold 2 * mean saliency (capped below 1)."""
    _check_dims(pred, gt)
    values = minmax_normalize(pred.values) if normalize else pred.values
    t = min(2.0 * values.mean(), 1.0 - _EPS)
    positive = values > t
    tp = float((positive & gt.bits).sum())
    predicted = float(positive.sum())
    actual = float(gt.bits.sum())
    precision = tp / predicted if predicted > 0 else 1.0
    recall = tp / actual if actual > 0 else 1.0
    den = beta_sq * precision + recall
    return (1.0 + beta_sq) * precision * recall / den if den > 0 else 0.0


def mae(pred: GrayMap, gt: BinaryMask) -> float:
    """Mean absolute per-pixel error against the binary ground truth."""
    _check_dims(pred, gt)
    return float(np.abs(pred.values - gt.bits.astype(np.float64)).mean())


def _object_score(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    m = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return 2.0 * m / (m * m + 1.0 + sd + _EPS)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    fg = np.where(gt, pred, 0.0)
    bg = np.where(gt, 0.0, 1.0 - pred)
    mu = float(gt.mean())
    return mu * _object_score(fg[gt]) + (1.0 - mu) * _object_score(bg[~gt])


def _region_ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    x = float(pred.mean())
    y = float(gt.mean())
    sx = float(((pred - x) ** 2).sum()) / (n - 1 + _EPS)
    sy = float(((gt - y) ** 2).sum()) / (n - 1 + _EPS)
    sxy = float(((pred - x) * (gt - y)).sum()) / (n - 1 + _EPS)
    alpha = 4.0 * x * y * sxy
    beta = (x * x + y * y) * (sx + sy)
    if alpha != 0.0:
        return alpha / (beta + _EPS)
    return 1.0 if beta == 0.0 else 0.0


def _gt_centroid(gt: np.ndarray) -> tuple[int, int]:
    h, w = gt.shape
    total = gt.sum()
    if total == 0:
        return int(np.floor(w / 2 + 0.5)), int(np.floor(h / 2 + 0.5))
    cols = np.arange(1, w + 1, dtype=np.float64)
    rows = np.arange(1, h + 1, dtype=np.float64)
    x = int(np.floor(float((gt.sum(axis=0) * cols).sum()) / total + 0.5))
    y = int(np.floor(float((gt.sum(axis=1) * rows).sum()) / total + 0.5))
    return x, y


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    cx, cy = _gt_centroid(gt)
    area = h * w
    weights = (
        (cx * cy) / area,
        ((w - cx) * cy) / area,
        (cx * (h - cy)) / area,
    )
    weights = weights + (1.0 - sum(weights),)
    blocks = (
        (slice(0, cy), slice(0, cx)),
        (slice(0, cy), slice(cx, w)),
        (slice(cy, h), slice(0, cx)),
        (slice(cy, h), slice(cx, w)),
    )
    score = 0.0
    for wgt, (by, bx) in zip(weights, blocks):
        pb, gb = pred[by, bx], gt[by, bx]
        if pb.size == 0 or wgt == 0.0:
            continue
        score += wgt * _region_ssim(pb, gb.astype(np.float64))
    return score


def s_measure(pred: GrayMap, gt: BinaryMask, alpha: float = 0.5) -> float:
    """Structure measure: mean of an object-aware term (foreground/background
    similarity weighted by ground-truth coverage) and a region-aware term
    (SSIM-style similarity over the four blocks split at the ground-truth
    centroid). Degenerate ground truths reduce to mean-based scores."""
    _check_dims(pred, gt)
    p = pred.values
    g = gt.bits
    y = float(g.mean())
    if y == 0.0:
        score = 1.0 - float(p.mean())
    elif y == 1.0:
        score = float(p.mean())
    else:
        score = alpha * _s_object(p, g) + (1.0 - alpha) * _s_region(p, g)
    return float(np.clip(score, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Dataset aggregation.


def _eval_one(args: tuple[str, str, str, float, bool]) -> dict:
    stem, pred_path, gt_path, beta_sq, normalize = args
    pred = load_gray(pred_path)
    gt = load_mask(gt_path)
    if (pred.height, pred.width) != (gt.height, gt.width):
        return {"stem": stem, "skip": "dimension mismatch"}
    pr = pr_curve(pred, gt, normalize=normalize)
    fmax, fmean = f_measure(pr, beta_sq)
    return {
        "stem": stem,
        "precision": pr.precision,
        "recall": pr.recall,
        "f_max": fmax,
        "f_mean": fmean,
        "adaptive_f": adaptive_f_measure(pred, gt, beta_sq, normalize=normalize),
        "mae": mae(pred, gt),
        "s_measure": s_measure(pred, gt),
    }


def evaluate_dataset(
    pred_dir: str | Path,
    gt_dir: str | Path,
    options: MetricOptions | None = None,
    jobs: int = 1,
) -> EvalResult:
    """Per-image metrics averaged arithmetically; PR curves averaged
    pointwise across images, with the dataset F computed from the averaged
    curve. Files are matched by stem; missing counterparts are reported in
    `skipped`, never fatal."""
    options = options or MetricOptions()
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    pred_files = {p.stem: p for p in sorted(pred_dir.glob("*.png"))}
    gt_files = {p.stem: p for p in sorted(gt_dir.glob("*.png"))}
    stems = sorted(set(pred_files) & set(gt_files))
    skipped = [
        {"stem": s, "reason": "missing ground truth"}
        for s in sorted(set(pred_files) - set(gt_files))
    ] + [
        {"stem": s, "reason": "missing prediction"}
        for s in sorted(set(gt_files) - set(pred_files))
    ]

    tasks = [
        (s, str(pred_files[s]), str(gt_files[s]), options.beta_sq, options.normalize_pred)
        for s in stems
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_eval_one, tasks))
    else:
        rows = [_eval_one(t) for t in tasks]

    per_image: list[PerImageResult] = []
    precisions, recalls, adaptive_fs = [], [], []
    for row in rows:
        if "skip" in row:
            skipped.append({"stem": row["stem"], "reason": row["skip"]})
            continue
        per_image.append(
            PerImageResult(row["stem"], row["f_max"], row["f_mean"], row["mae"], row["s_measure"])
        )
        precisions.append(row["precision"])
        recalls.append(row["recall"])
        adaptive_fs.append(row["adaptive_f"])

    thresholds = np.arange(1, 256, dtype=np.float64) / 255.0
    if not per_image:
        empty = PrCurve(thresholds, np.zeros(255), np.zeros(255))
        return EvalResult(0.0, 0.0, 0.0, 0.0, empty, [], skipped)

    dataset_pr = PrCurve(
        thresholds,
        np.mean(np.stack(precisions), axis=0),
        np.mean(np.stack(recalls), axis=0),
    )
    fmax, fmean = f_measure(dataset_pr, options.beta_sq)
    if options.mean_f_mode == "adaptive":
        fmean = float(np.mean(adaptive_fs))
    return EvalResult(
        f_max=fmax,
        f_mean=fmean,
        mae=float(np.mean([r.mae for r in per_image])),
        s_measure=float(np.mean([r.s_measure for r in per_image])),
        pr=dataset_pr,
        per_image=per_image,
        skipped=skipped,
    )
