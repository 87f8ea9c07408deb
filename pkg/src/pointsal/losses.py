"""Training loss kernels with analytic gradients with respect to the
predicted maps, for consumption by external trainers: edge cross entropy,
trimap-masked partial cross entropy, and the window-limited pairwise
smoothness loss with an image-dependent Gaussian bandwidth filter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import BG, FG, BinaryMask, GrayMap, RasterImage, Trimap

BCE_EPS = 1e-7


@dataclass(frozen=True)
class GatedCrfParams:
    """k x k window smoothness kernel settings. The exponent uses plain L2
    norms by default; `squared_exponent` switches to the conventional
    squared-distance Gaussian for interoperability."""

    kernel_size: int = 5
    sigma_pt: float = 3.0
    sigma_rgb: float = 0.1  # on [0, 1] normalized RGB
    normalize_per_pixel: bool = True
    squared_exponent: bool = False

    def __post_init__(self):
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and >= 3, got {self.kernel_size}")
        if self.sigma_pt <= 0 or self.sigma_rgb <= 0:
            raise ValueError("kernel bandwidths must be > 0")


@dataclass(frozen=True)
class LossWeights:
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0 or self.alpha3 < 0:
            raise ValueError("loss weights must be >= 0")
        if self.alpha1 == self.alpha2 == self.alpha3 == 0:
            raise ValueError("at least one loss weight must be nonzero")


@dataclass(frozen=True)
class LossValue:
    scalar: float
    gradient: np.ndarray  # d(scalar)/d(prediction), same shape as the prediction


@dataclass(frozen=True)
class TotalLossValue:
    scalar: float
    bce: float
    partial_bce: float
    gated_crf: float
    edge_gradient: np.ndarray
    saliency_gradient: np.ndarray


def _check_dims(pred: GrayMap, other_shape: tuple[int, int], what: str) -> None:
    if (pred.height, pred.width) != other_shape:
        raise ValueError(
            f"prediction dims {(pred.height, pred.width)} do not match {what} dims {other_shape}"
        )


def bce(pred_edge: GrayMap, target: BinaryMask) -> LossValue:
    """Summed binary cross entropy of a predicted edge map against a binary
    target; gradient is (e - y) / (e (1 - e)) at the clamped values."""
    _check_dims(pred_edge, (target.height, target.width), "target")
    e = np.clip(pred_edge.values, BCE_EPS, 1.0 - BCE_EPS)
    y = target.bits.astype(np.float64)
    scalar = -np.sum(y * np.log(e) + (1.0 - y) * np.log(1.0 - e))
    grad = (e - y) / (e * (1.0 - e))
    return LossValue(float(scalar), grad)


def partial_bce(pred: GrayMap, label: Trimap) -> LossValue:
    """Cross entropy restricted to the definite (FG/BG) trimap area; the
    gradient is exactly zero at every uncertain pixel."""
    _check_dims(pred, (label.height, label.width), "trimap")
    s = np.clip(pred.values, BCE_EPS, 1.0 - BCE_EPS)
    definite = (label.labels == FG) | (label.labels == BG)
    g = (label.labels == FG).astype(np.float64)
    per_pixel = -(g * np.log(s) + (1.0 - g) * np.log(1.0 - s))
    scalar = per_pixel[definite].sum()
    grad = np.where(definite, (s - g) / (s * (1.0 - s)), 0.0)
    return LossValue(float(scalar), grad)


def _window_offsets(k: int):
    r = k // 2
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            yield dy, dx


def _pair_slices(dy: int, dx: int, h: int, wdt: int):
    iy = slice(max(0, -dy), h - max(0, dy))
    jy = slice(max(0, dy), h - max(0, -dy))
    ix = slice(max(0, -dx), wdt - max(0, dx))
    jx = slice(max(0, dx), wdt - max(0, -dx))
    return (iy, ix), (jy, jx)


def gated_crf_loss(pred: GrayMap, image: RasterImage, params: GatedCrfParams) -> LossValue:
    """Sum over pixels i and window neighbors j of |s_i - s_j| f(i, j) where
    f is the image-dependent Gaussian bandwidth filter; f does not depend on
    the prediction, so the gradient is the exact subgradient with sign(0)=0.
    """
    h, wdt = pred.height, pred.width
    _check_dims(pred, (image.height, image.width), "image")
    k = params.kernel_size
    if k >= 2 * min(h, wdt):
        raise ValueError(f"kernel_size {k} too large for a {h}x{wdt} map")
    s = pred.values
    rgb = image.rgb.astype(np.float64) / 255.0

    # Pass 1: raw kernel per offset, plus per-pixel window mass for 1/w.
    kernels = []
    wsum = np.zeros((h, wdt))
    for dy, dx in _window_offsets(k):
        (iy, ix), (jy, jx) = _pair_slices(dy, dx, h, wdt)
        cdiff = rgb[iy, ix] - rgb[jy, jx]
        c2 = np.einsum("ijk,ijk->ij", cdiff, cdiff)
        p2 = float(dy * dy + dx * dx)
        if params.squared_exponent:
            expo = -p2 / (2.0 * params.sigma_pt**2) - c2 / (2.0 * params.sigma_rgb**2)
        else:
            expo = -np.sqrt(p2) / (2.0 * params.sigma_pt**2) - np.sqrt(c2) / (
                2.0 * params.sigma_rgb**2
            )
        ker = np.exp(expo)
        kernels.append((dy, dx, ker))
        wsum[iy, ix] += ker

    # Pass 2: loss and scatter-added subgradient.
    scalar = 0.0
    grad = np.zeros((h, wdt))
    for dy, dx, ker in kernels:
        (iy, ix), (jy, jx) = _pair_slices(dy, dx, h, wdt)
        f = ker / wsum[iy, ix] if params.normalize_per_pixel else ker
        diff = s[iy, ix] - s[jy, jx]
        scalar += float((np.abs(diff) * f).sum())
        sgn = np.sign(diff)
        grad[iy, ix] += sgn * f
        grad[jy, jx] -= sgn * f
    return LossValue(scalar, grad)


def total_loss(
    edge_pair: tuple[GrayMap, BinaryMask],
    saliency_pair: tuple[GrayMap, Trimap],
    image: RasterImage,
    gcrf_params: GatedCrfParams,
    weights: LossWeights,
) -> TotalLossValue:
    """Weighted sum of the three terms; the edge gradient comes from the
    cross-entropy term and the saliency gradient from the other two."""
    edge_pred, edge_target = edge_pair
    saliency_pred, label = saliency_pair
    l_bce = bce(edge_pred, edge_target)
    l_pbce = partial_bce(saliency_pred, label)
    l_gcrf = gated_crf_loss(saliency_pred, image, gcrf_params)
    scalar = weights.alpha1 * l_bce.scalar + weights.alpha2 * l_pbce.scalar + weights.alpha3 * l_gcrf.scalar
    return TotalLossValue(
        scalar=float(scalar),
        bce=l_bce.scalar,
        partial_bce=l_pbce.scalar,
        gated_crf=l_gcrf.scalar,
        edge_gradient=weights.alpha1 * l_bce.gradient,
        saliency_gradient=weights.alpha2 * l_pbce.gradient + weights.alpha3 * l_gcrf.gradient,
    )
