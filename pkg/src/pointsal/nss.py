"""Non-salient suppression: keep only saliency blobs connected to annotated
points, then mark a dilated halo as uncertain for the second-round trimap."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .floodfill import BarrierField, FloodFillParams, PointAnnotation, flood_fill
from .imaging import BG, FG, UNCERTAIN, BinaryMask, GrayMap, Point, Trimap, binarize, dilate


@dataclass(frozen=True)
class NssParams:
    """`dilation_radius` is the Chebyshev radius of the uncertain halo; the
    default 5 realizes a 10-wide expansion with a symmetric 11x11 window."""

    saliency_threshold: float = 0.5
    dilation_radius: int = 5
    dilation_shape: str = "square"

    def __post_init__(self):
        if not 0.0 <= self.saliency_threshold <= 1.0:
            raise ValueError(f"saliency_threshold must be in [0, 1], got {self.saliency_threshold}")
        if self.dilation_radius < 0:
            raise ValueError(f"dilation_radius must be >= 0, got {self.dilation_radius}")


def _check_points(points: list[Point], width: int, height: int) -> None:
    for p in points:
        if not p.inside(width, height):
            raise ValueError(f"point {p} outside {width}x{height} map")


def extract_seeded_components(
    saliency: GrayMap, fg_points: list[Point], params: NssParams
) -> BinaryMask:
    """Union of 4-connected above-threshold components that contain at least
    one foreground point. Points on sub-threshold pixels contribute nothing
    (their object was missed by the first round)."""
    _check_points(fg_points, saliency.width, saliency.height)
    above = binarize(saliency, params.saliency_threshold)
    barrier = BarrierField(~above.bits)
    zero_field = GrayMap(np.zeros(above.bits.shape))
    kept = np.zeros(above.bits.shape, dtype=bool)
    for p in fg_points:
        if not above.bits[p.y, p.x] or kept[p.y, p.x]:
            continue
        kept |= flood_fill(p, zero_field, barrier, FloodFillParams()).bits
    return BinaryMask(kept)


def dropped_seeds(saliency: GrayMap, fg_points: list[Point], params: NssParams) -> list[Point]:
    """Foreground points landing on sub-threshold pixels (objects the first
    round missed); reported for diagnostics, never an error."""
    _check_points(fg_points, saliency.width, saliency.height)
    return [p for p in fg_points if saliency.values[p.y, p.x] <= params.saliency_threshold]


def build_second_round_label(p_f: BinaryMask, params: NssParams) -> Trimap:
    """FG = kept blobs, UNCERTAIN = their dilated halo, BG = everything else."""
    kernel = 2 * params.dilation_radius + 1
    grown = dilate(p_f, kernel, shape=params.dilation_shape)
    labels = np.full(p_f.bits.shape, BG, dtype=np.uint8)
    labels[grown.bits] = UNCERTAIN
    labels[p_f.bits] = FG
    return Trimap(labels)


def nss_pipeline(saliency: GrayMap, annotation: PointAnnotation, params: NssParams) -> Trimap:
    """Second-round trimap from a (CRF-refined) first-round saliency map."""
    kept = extract_seeded_components(saliency, annotation.foreground_points, params)
    return build_second_round_label(kept, params)


@dataclass
class SuppressionReport:
    components_total: int
    components_kept: int
    components_removed: int
    dropped_seeds: list[Point]


def suppression_report(
    saliency: GrayMap, fg_points: list[Point], params: NssParams
) -> SuppressionReport:
    """Count above-threshold components with/without seeds for diagnostics."""
    _check_points(fg_points, saliency.width, saliency.height)
    above = binarize(saliency, params.saliency_threshold).bits
    barrier = BarrierField(~above)
    zero_field = GrayMap(np.zeros(above.shape))
    seen = np.zeros(above.shape, dtype=bool)
    total = kept = 0
    seed_hits = np.zeros(above.shape, dtype=bool)
    usable = [p for p in fg_points if above[p.y, p.x]]
    for p in usable:
        seed_hits[p.y, p.x] = True
    ys, xs = np.nonzero(above)
    for y, x in zip(ys.tolist(), xs.tolist()):
        if seen[y, x]:
            continue
        comp = flood_fill(Point(x, y), zero_field, barrier, FloodFillParams()).bits
        seen |= comp
        total += 1
        if (comp & seed_hits).any():
            kept += 1
    return SuppressionReport(
        components_total=total,
        components_kept=kept,
        components_removed=total - kept,
        dropped_seeds=dropped_seeds(saliency, fg_points, params),
    )
