#!/usr/bin/env python3
"""Regenerate the bundled mini dataset under src/pointsal/data/mini.

Five 64x64 synthetic scenes with flat-color objects: each has one or two
annotated salient objects and most carry an unannotated distractor so the
suppression stage has something to remove. The committed files are the
deterministic output of this script; rerunning it must be a no-op diff.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
from scipy import ndimage

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from pointsal.cli import demo_edge_map  # noqa: E402
from pointsal.floodfill import AnnotatedImage, Point, save_annotations  # noqa: E402
from pointsal.imaging import BinaryMask, GrayMap, RasterImage, save_gray, save_mask, save_rgb  # noqa: E402

SIZE = 64
YY, XX = np.mgrid[0:SIZE, 0:SIZE]


def disc(cx: int, cy: int, r: int) -> np.ndarray:
    return (XX - cx) ** 2 + (YY - cy) ** 2 <= r * r


def rect(x0: int, x1: int, y0: int, y1: int) -> np.ndarray:
    return (XX >= x0) & (XX <= x1) & (YY >= y0) & (YY <= y1)


def ellipse(cx: int, cy: int, rx: int, ry: int) -> np.ndarray:
    return ((XX - cx) / rx) ** 2 + ((YY - cy) / ry) ** 2 <= 1.0


def flat(color: tuple[int, int, int]) -> np.ndarray:
    img = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    img[...] = color
    return img


def paint(img: np.ndarray, mask: np.ndarray, color: tuple[int, int, int]) -> None:
    img[mask] = color


def round1_map(blobs: list[np.ndarray]) -> np.ndarray:
    """Synthetic first-round saliency: bright on every blob (salient or
    distractor), softened with a box blur so values are non-binary."""
    m = np.zeros((SIZE, SIZE))
    for blob in blobs:
        m[blob] = 1.0
    m = ndimage.uniform_filter(m, size=5, mode="constant")
    m = ndimage.uniform_filter(m, size=5, mode="constant")
    return np.clip(0.05 + 0.9 * m, 0.0, 1.0)


def build() -> tuple[list[dict], list[AnnotatedImage]]:
    scenes = []

    img = flat((168, 152, 120))
    salient = disc(22, 24, 9)
    distractor = disc(48, 46, 6)
    paint(img, salient, (40, 70, 160))
    paint(img, distractor, (60, 130, 60))
    scenes.append(
        dict(id="img01", rgb=img, gt=salient, blobs=[salient, distractor],
             fg=[(22, 24)], bg=(54, 10))
    )

    img = flat((120, 130, 150))
    sq1 = rect(8, 20, 10, 22)
    sq2 = rect(40, 54, 36, 50)
    paint(img, sq1 | sq2, (170, 50, 50))
    scenes.append(
        dict(id="img02", rgb=img, gt=sq1 | sq2, blobs=[sq1, sq2],
             fg=[(14, 16), (47, 43)], bg=(58, 6))
    )

    img = flat((90, 110, 90))
    cross = rect(20, 44, 28, 36) | rect(28, 36, 20, 44)
    distractor = rect(6, 14, 46, 58)
    paint(img, cross, (200, 120, 40))
    paint(img, distractor, (150, 150, 155))
    scenes.append(
        dict(id="img03", rgb=img, gt=cross, blobs=[cross, distractor],
             fg=[(32, 32)], bg=(56, 56))
    )

    img = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    img[..., 0] = 100
    img[..., 1] = 110 + (25 * YY / (SIZE - 1)).astype(np.uint8)
    img[..., 2] = 130 + (40 * YY / (SIZE - 1)).astype(np.uint8)
    blob = ellipse(40, 28, 12, 8)
    distractor = disc(14, 50, 5)
    paint(img, blob, (230, 230, 230))
    paint(img, distractor, (30, 30, 40))
    scenes.append(
        dict(id="img04", rgb=img, gt=blob, blobs=[blob, distractor],
             fg=[(40, 28)], bg=(8, 8))
    )

    img = flat((140, 120, 140))
    d1 = disc(16, 16, 7)
    sq = rect(44, 58, 44, 58)
    distractor = disc(50, 14, 5)
    paint(img, d1, (60, 60, 170))
    paint(img, sq, (190, 180, 60))
    paint(img, distractor, (90, 160, 160))
    scenes.append(
        dict(id="img05", rgb=img, gt=d1 | sq, blobs=[d1, sq, distractor],
             fg=[(16, 16), (51, 51)], bg=(20, 60))
    )

    records = [
        AnnotatedImage(
            image_id=s["id"],
            width=SIZE,
            height=SIZE,
            foreground_points=[Point(x, y) for x, y in s["fg"]],
            background_point=Point(*s["bg"]),
            status="done",
            version=1,
        )
        for s in scenes
    ]
    return scenes, records


def main() -> None:
    out = ROOT / "src" / "pointsal" / "data" / "mini"
    for sub in ("images", "edges", "gt", "round1"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    scenes, records = build()
    for s in scenes:
        image = RasterImage(s["rgb"])
        save_rgb(image, out / "images" / f"{s['id']}.png")
        save_gray(demo_edge_map(image), out / "edges" / f"{s['id']}.png")
        save_mask(BinaryMask(s["gt"]), out / "gt" / f"{s['id']}.png")
        save_gray(GrayMap(round1_map(s["blobs"])), out / "round1" / f"{s['id']}.png")
    save_annotations(records, out / "annotations.json")
    (out / "manifest.json").write_text(
        '{\n  "images": "images",\n  "edges": "edges",\n'
        '  "annotations": "annotations.json",\n  "gt": "gt"\n}\n'
    )
    print(f"mini dataset written to {out}")


if __name__ == "__main__":
    main()
