"""Point-supervised saliency pseudo-labeling toolkit."""

from .imaging import (
    BG,
    FG,
    UNCERTAIN,
    BinaryMask,
    GrayMap,
    Point,
    RasterImage,
    Trimap,
    binarize,
    dilate,
    rasterize_circle,
)
from .floodfill import (
    AdaptiveMaskConfig,
    BarrierField,
    EmptyFillError,
    FloodFillParams,
    PointAnnotation,
    build_barrier,
    flood_fill,
    generate_pseudo_label,
    mask_radius,
)
from .nss import NssParams, build_second_round_label, extract_seeded_components, nss_pipeline
from .crf import DenseCrfParams, crf_refine
from .losses import GatedCrfParams, LossValue, LossWeights, bce, gated_crf_loss, partial_bce, total_loss
from .metrics import EvalResult, MetricOptions, PrCurve, evaluate_dataset, f_measure, mae, pr_curve, s_measure
from .config import DatasetManifest, PipelineConfig

__version__ = "0.1.0"

__all__ = [
    "BG",
    "FG",
    "UNCERTAIN",
    "AdaptiveMaskConfig",
    "BarrierField",
    "BinaryMask",
    "DatasetManifest",
    "DenseCrfParams",
    "EmptyFillError",
    "EvalResult",
    "FloodFillParams",
    "GatedCrfParams",
    "GrayMap",
    "LossValue",
    "LossWeights",
    "MetricOptions",
    "NssParams",
    "PipelineConfig",
    "Point",
    "PointAnnotation",
    "PrCurve",
    "RasterImage",
    "Trimap",
    "bce",
    "binarize",
    "build_barrier",
    "build_second_round_label",
    "crf_refine",
    "dilate",
    "evaluate_dataset",
    "extract_seeded_components",
    "f_measure",
    "flood_fill",
    "gated_crf_loss",
    "generate_pseudo_label",
    "mae",
    "mask_radius",
    "nss_pipeline",
    "partial_bce",
    "pr_curve",
    "rasterize_circle",
    "s_measure",
    "total_loss",
]
