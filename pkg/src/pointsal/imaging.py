"""Raster primitives shared by all modules: typed pixel buffers, binary
morphology, circle rasterization, and lossless PNG round-trips."""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

BG = 0
UNCERTAIN = 128
FG = 255

TRIMAP_CODES = (BG, UNCERTAIN, FG)


@dataclass(frozen=True)
class Point:
    """Image-space pixel coordinate (x = column, y = row)."""

    x: int
    y: int

    def inside(self, width: int, height: int) -> bool:
        return 0 <= self.x < width and 0 <= self.y < height


@dataclass(frozen=True)
class RasterImage:
    """24-bit RGB image stored as a uint8 (H, W, 3) array."""

    rgb: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.rgb)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"rgb buffer must be (H, W, 3), got {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if a.dtype != np.uint8:
            raise ValueError(f"rgb buffer must be uint8, got {a.dtype}")
        object.__setattr__(self, "rgb", a)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


@dataclass(frozen=True)
class GrayMap:
    """Dense H x W field of reals in [0, 1] (saliency maps, edge maps)."""

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("map must be at least 1x1")
        if np.isnan(a).any() or a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("gray map values must lie in [0, 1]")
        object.__setattr__(self, "values", a)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel boolean mask."""

    bits: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.bits)
        if a.ndim != 2:
            raise ValueError(f"bits must be 2-D, got shape {a.shape}")
        if a.dtype != np.bool_:
            raise ValueError(f"bits must be boolean, got {a.dtype}")
        object.__setattr__(self, "bits", a)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Trimap:
    """Per-pixel label in {BG=0, UNCERTAIN=128, FG=255} as uint8."""

    labels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {a.shape}")
        if a.dtype != np.uint8:
            raise ValueError(f"labels must be uint8, got {a.dtype}")
        if not np.isin(a, TRIMAP_CODES).all():
            bad = sorted(set(np.unique(a)) - set(TRIMAP_CODES))
            raise ValueError(f"trimap contains codes outside {{0,128,255}}: {bad}")
        object.__setattr__(self, "labels", a)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def fg_mask(self) -> BinaryMask:
        return BinaryMask(self.labels == FG)

    def bg_mask(self) -> BinaryMask:
        return BinaryMask(self.labels == BG)

    def uncertain_mask(self) -> BinaryMask:
        return BinaryMask(self.labels == UNCERTAIN)


def dilate(mask: BinaryMask, kernel: int, shape: str = "square") -> BinaryMask:
    """Binary dilation by an odd `kernel` x `kernel` window centered per pixel.

    `shape` selects the structuring element: "square" (Chebyshev window) or
    "disc" (Euclidean radius (kernel-1)/2).
    """
    if kernel < 1:
        raise ValueError(f"dilation kernel must be >= 1, got {kernel}")
    if kernel % 2 == 0:
        raise ValueError(f"dilation kernel must be odd, got {kernel}")
    if kernel == 1:
        return BinaryMask(mask.bits.copy())
    if shape == "square":
        out = ndimage.maximum_filter(mask.bits, size=kernel, mode="constant", cval=False)
    elif shape == "disc":
        r = (kernel - 1) // 2
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
        footprint = (yy * yy + xx * xx) <= r * r
        out = ndimage.maximum_filter(mask.bits, footprint=footprint, mode="constant", cval=False)
    else:
        raise ValueError(f"unknown dilation shape {shape!r}")
    return BinaryMask(out)


def binarize(gray: GrayMap, threshold: float) -> BinaryMask:
    """Bit set iff the value is strictly above `threshold`."""
    return BinaryMask(gray.values > threshold)


def rasterize_circle(center: Point, radius: float, dims: tuple[int, int]) -> BinaryMask:
    """Rasterize a circle perimeter as a closed 8-connected one-pixel ring.

    `dims` is (height, width); arcs falling outside the image are clipped
    (the image border itself blocks flood fill, so clipped rings still
    enclose). Pixels strictly inside the ring are not 4-connected to pixels
    outside it.
    """
    if radius <= 0:
        raise ValueError(f"circle radius must be > 0, got {radius}")
    height, width = dims
    if not center.inside(width, height):
        raise ValueError(f"circle center {center} outside {width}x{height} image")
    r = max(1, int(round(radius)))
    mask = np.zeros((height, width), dtype=bool)
    cx, cy = center.x, center.y

    def put(dx: int, dy: int) -> None:
        x, y = cx + dx, cy + dy
        if 0 <= x < width and 0 <= y < height:
            mask[y, x] = True

    # Midpoint circle: one octant mirrored 8 ways yields a closed 8-ring.
    x, y = r, 0
    err = 1 - r
    while x >= y:
        put(x, y)
        put(y, x)
        put(-y, x)
        put(-x, y)
        put(-x, -y)
        put(-y, -x)
        put(y, -x)
        put(x, -y)
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1
    return BinaryMask(mask)


# ---------------------------------------------------------------------------
# Lossless PNG I/O. Trimap codes are bit-exact: BG=0, UNCERTAIN=128, FG=255.


def load_rgb(path: str | Path) -> RasterImage:
    with Image.open(path) as im:
        return RasterImage(np.asarray(im.convert("RGB"), dtype=np.uint8))


def save_rgb(image: RasterImage, path: str | Path) -> None:
    Image.fromarray(image.rgb, mode="RGB").save(path, format="PNG")


def load_gray(path: str | Path) -> GrayMap:
    """Load an 8-bit grayscale file, normalized to [0, 1] by dividing by 255."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return GrayMap(arr / 255.0)


def save_gray(gray: GrayMap, path: str | Path) -> None:
    arr = np.round(gray.values * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_mask(path: str | Path, threshold: int = 128) -> BinaryMask:
    """Load an 8-bit file as a binary mask (pixel >= threshold)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return BinaryMask(arr >= threshold)


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_trimap(path: str | Path) -> Trimap:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return Trimap(arr)


def encode_trimap_png(trimap: Trimap) -> bytes:
    """Encode a trimap to PNG bytes; the single shared encoder keeps batch
    outputs and service previews byte-identical."""
    buf = io.BytesIO()
    Image.fromarray(trimap.labels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_trimap(trimap: Trimap, path: str | Path) -> None:
    Path(path).write_bytes(encode_trimap_png(trimap))


def resize_rgb(image: RasterImage, width: int, height: int) -> RasterImage:
    im = Image.fromarray(image.rgb, mode="RGB").resize((width, height), Image.BILINEAR)
    return RasterImage(np.asarray(im, dtype=np.uint8))


def resize_gray(gray: GrayMap, width: int, height: int) -> GrayMap:
    arr = np.round(gray.values * 255.0).astype(np.uint8)
    im = Image.fromarray(arr, mode="L").resize((width, height), Image.BILINEAR)
    return GrayMap(np.asarray(im, dtype=np.float64) / 255.0)
