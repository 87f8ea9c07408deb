"""Dense fully-connected CRF refinement of saliency maps by binary-label
mean-field inference with Gaussian appearance and smoothness kernels.

Pairwise message passing is brute-force O(N^2) per sweep and intended for
desk-scale images; `neighbor_subsample` switches to a deterministic landmark
approximation for anything larger.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import GrayMap, RasterImage

UNARY_EPS = 1e-4

# Kernel rows are produced in blocks of at most this many matrix entries so
# peak memory stays bounded for large N.
_BLOCK_ENTRIES = 1 << 21
# Full-kernel caching across sweeps is only worth the memory at desk scale.
_CACHE_LIMIT = 4096


@dataclass(frozen=True)
class DenseCrfParams:
    iterations: int = 10
    appearance_weight: float = 4.0
    smoothness_weight: float = 3.0
    sigma_spatial_app: float = 49.0
    sigma_color: float = 5.0  # on the 0..255 channel scale
    sigma_spatial_smooth: float = 3.0
    schedule: str = "sequential"  # "sequential" | "damped_parallel"
    damping: float = 0.5
    neighbor_subsample: int | None = None

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.appearance_weight < 0 or self.smoothness_weight < 0:
            raise ValueError("pairwise weights must be >= 0")
        for name in ("sigma_spatial_app", "sigma_color", "sigma_spatial_smooth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.schedule not in ("sequential", "damped_parallel"):
            raise ValueError(f"unknown update schedule {self.schedule!r}")
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if self.neighbor_subsample is not None and self.neighbor_subsample < 1:
            raise ValueError("neighbor_subsample must be >= 1 when set")


def unaries(saliency: GrayMap) -> np.ndarray:
    """Negative log-probability unaries, shape (N, 2) as [bg, fg] columns.

    Saliency is clamped to [eps, 1-eps] first so the logs stay finite.
    """
    s = np.clip(saliency.values.ravel(), UNARY_EPS, 1.0 - UNARY_EPS)
    return np.stack([-np.log(1.0 - s), -np.log(s)], axis=1)


def _features(image: RasterImage) -> tuple[np.ndarray, np.ndarray]:
    h, w = image.height, image.width
    ys, xs = np.mgrid[0:h, 0:w]
    pos = np.stack([ys.ravel(), xs.ravel()], axis=1).astype(np.float64)
    rgb = image.rgb.reshape(-1, 3).astype(np.float64)
    return pos, rgb


def _kernel_block(
    row_lo: int,
    row_hi: int,
    pos: np.ndarray,
    rgb: np.ndarray,
    cols: np.ndarray | None,
    params: DenseCrfParams,
) -> np.ndarray:
    """Rows [row_lo, row_hi) of the combined pairwise matrix, zero diagonal."""
    pos_cols = pos if cols is None else pos[cols]
    rgb_cols = rgb if cols is None else rgb[cols]
    dp = pos[row_lo:row_hi, None, :] - pos_cols[None, :, :]
    pd2 = np.einsum("ijk,ijk->ij", dp, dp)
    dc = rgb[row_lo:row_hi, None, :] - rgb_cols[None, :, :]
    cd2 = np.einsum("ijk,ijk->ij", dc, dc)
    block = params.appearance_weight * np.exp(
        -pd2 / (2.0 * params.sigma_spatial_app**2) - cd2 / (2.0 * params.sigma_color**2)
    )
    block += params.smoothness_weight * np.exp(-pd2 / (2.0 * params.sigma_spatial_smooth**2))
    rows_idx = np.arange(row_lo, row_hi)
    if cols is None:
        block[np.arange(row_hi - row_lo), rows_idx] = 0.0
    else:
        hit_r, hit_c = np.nonzero(rows_idx[:, None] == cols[None, :])
        block[hit_r, hit_c] = 0.0
    return block


def _iter_blocks(pos, rgb, cols, params):
    n = pos.shape[0]
    m = n if cols is None else cols.shape[0]
    step = max(1, _BLOCK_ENTRIES // max(1, m))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        yield lo, hi, _kernel_block(lo, hi, pos, rgb, cols, params)


def build_pairwise_matrix(image: RasterImage, params: DenseCrfParams) -> np.ndarray:
    """Full N x N combined pairwise matrix; desk-scale only (N <= 8192)."""
    n = image.height * image.width
    if n > 8192:
        raise ValueError(f"dense pairwise matrix limited to 8192 pixels, got {n}")
    pos, rgb = _features(image)
    out = np.empty((n, n))
    for lo, hi, block in _iter_blocks(pos, rgb, None, params):
        out[lo:hi] = block
    return out


def free_energy(q: np.ndarray, unary: np.ndarray, pairwise: np.ndarray) -> float:
    """Mean-field variational free energy E_q[energy] - H(q) for a product
    distribution q of shape (N, 2) under Potts pairwise compatibility."""
    ent = np.where(q > 0.0, q * np.log(q), 0.0).sum()
    pair = q[:, 0] @ (pairwise @ q[:, 1])
    return float((q * unary).sum() + pair + ent)


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def mean_field_marginals(
    saliency: GrayMap, image: RasterImage, params: DenseCrfParams
) -> np.ndarray:
    """Run mean-field inference; returns marginals of shape (H, W, 2) as
    [bg, fg]. Columns sum to 1 per pixel at every iteration."""
    h, w = saliency.height, saliency.width
    if (image.height, image.width) != (h, w):
        raise ValueError(
            f"image dims {(image.height, image.width)} do not match saliency dims {(h, w)}"
        )
    s = np.clip(saliency.values.ravel(), UNARY_EPS, 1.0 - UNARY_EPS)
    q = np.stack([1.0 - s, s], axis=1)
    if params.iterations == 0 or (
        params.appearance_weight == 0.0 and params.smoothness_weight == 0.0
    ):
        # Pairwise-free mean field is stationary at the unary softmax, which
        # is exactly the clamped input.
        return q.reshape(h, w, 2)

    n = h * w
    u = unaries(saliency)
    pos, rgb = _features(image)
    cols = None
    scale = 1.0
    if params.neighbor_subsample is not None and n > params.neighbor_subsample:
        m = params.neighbor_subsample
        cols = np.sort(np.random.default_rng(0).choice(n, size=m, replace=False))
        scale = (n - 1) / m

    cached = None
    if n <= _CACHE_LIMIT:
        cached = list(_iter_blocks(pos, rgb, cols, params))

    for _ in range(params.iterations):
        blocks = cached if cached is not None else _iter_blocks(pos, rgb, cols, params)
        if params.schedule == "sequential":
            for lo, hi, block in blocks:
                for i in range(lo, hi):
                    q_cols = q if cols is None else q[cols]
                    msg = block[i - lo] @ q_cols
                    q[i] = _softmax_rows(-(u[i] + scale * msg[::-1]))
        else:
            msgs = np.empty((n, 2))
            q_cols = q if cols is None else q[cols]
            for lo, hi, block in blocks:
                msgs[lo:hi] = block @ q_cols
            target = _softmax_rows(-(u + scale * msgs[:, ::-1]))
            q = (1.0 - params.damping) * q + params.damping * target
    return q.reshape(h, w, 2)


def crf_refine(saliency: GrayMap, image: RasterImage, params: DenseCrfParams) -> GrayMap:
    """Refined foreground marginal map in [0, 1]."""
    return GrayMap(mean_field_marginals(saliency, image, params)[..., 1])
