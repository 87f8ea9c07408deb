"""Masked flood filling: adaptive circle barriers around annotated points,
4-connected tolerance-band filling, and first-round trimap generation."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import (
    BG,
    FG,
    UNCERTAIN,
    BinaryMask,
    GrayMap,
    Point,
    Trimap,
    binarize,
    rasterize_circle,
)


class EmptyFillError(ValueError):
    """Seed landed on a blocked pixel and no unblocked neighbor was found."""


class AnnotationFormatError(ValueError):
    """Annotation document is structurally invalid; message carries the field path."""


@dataclass(frozen=True)
class PointAnnotation:
    """One annotated image: foreground seed per salient object plus one
    background point (absent while a session is still in progress)."""

    image_id: str
    foreground_points: list[Point]
    background_point: Point | None

    def __post_init__(self):
        if len(self.foreground_points) < 1:
            raise ValueError(f"{self.image_id}: at least one foreground point required")
        if self.background_point is not None and self.background_point in self.foreground_points:
            raise ValueError(f"{self.image_id}: background point equals a foreground point")

    def all_points(self) -> list[Point]:
        pts = list(self.foreground_points)
        if self.background_point is not None:
            pts.append(self.background_point)
        return pts


@dataclass(frozen=True)
class AdaptiveMaskConfig:
    """Adaptive circle + edge-barrier settings.

    `bound_background` keeps the circle around the background point (the
    background fill then stays inside its disc); turning it off lets the
    background fill cover the whole non-salient region.
    """

    gamma: float = 5.0
    edge_threshold: float = 0.5
    bound_background: bool = True

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0.0 <= self.edge_threshold <= 1.0:
            raise ValueError(f"edge_threshold must be in [0, 1], got {self.edge_threshold}")


@dataclass(frozen=True)
class FloodFillParams:
    """Tolerance band relative to the seed value; connectivity is fixed at 4.

    The (-0.5, 0.5) default makes every pixel of a constant-zero field pass
    the band, so barriers alone bound the fill.
    """

    lo: float = -0.5
    hi: float = 0.5

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"tolerance band requires lo < hi, got ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class BarrierField:
    """Binary field the fill may not cross: detected edges union circle rings."""

    blocked: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.blocked)
        if a.ndim != 2 or a.dtype != np.bool_:
            raise ValueError("blocked must be a 2-D boolean array")
        object.__setattr__(self, "blocked", a)

    @property
    def height(self) -> int:
        return self.blocked.shape[0]

    @property
    def width(self) -> int:
        return self.blocked.shape[1]


@dataclass
class SeedOutcome:
    requested: Point
    used: Point | None
    kind: str  # "foreground" | "background"
    nudged: bool
    filled_pixels: int = 0


@dataclass
class PseudoLabelResult:
    trimap: Trimap
    radius: float
    seeds: list[SeedOutcome]

    def nudged_seeds(self) -> list[SeedOutcome]:
        return [s for s in self.seeds if s.nudged]

    def dropped_seeds(self) -> list[SeedOutcome]:
        return [s for s in self.seeds if s.kind == "foreground" and s.filled_pixels == 0]


def mask_radius(height: int, width: int, gamma: float) -> float:
    """Adaptive circle radius min(height/gamma, width/gamma), unrounded."""
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if height < 1 or width < 1:
        raise ValueError(f"image dims must be >= 1, got {height}x{width}")
    return min(height / gamma, width / gamma)


def flood_fill(
    seed: Point, fieldmap: GrayMap, barrier: BarrierField, params: FloodFillParams
) -> BinaryMask:
    """4-connected fill from `seed` through unblocked pixels whose value lies
    within (lo, hi) of the seed value; the seed itself is always included.

    Implemented as a breadth-first frontier worklist; the result is the exact
    reachable set, independent of traversal order.
    """
    h, w = fieldmap.height, fieldmap.width
    if barrier.blocked.shape != (h, w):
        raise ValueError(
            f"barrier dims {barrier.blocked.shape} do not match field dims {(h, w)}"
        )
    if not seed.inside(w, h):
        raise ValueError(f"seed {seed} outside {w}x{h} field")
    if barrier.blocked[seed.y, seed.x]:
        raise EmptyFillError(f"seed {seed} lies on a blocked pixel")

    vals = fieldmap.values
    delta = vals - vals[seed.y, seed.x]
    allowed = (~barrier.blocked) & (delta > params.lo) & (delta < params.hi)
    allowed[seed.y, seed.x] = True
    allowed_flat = allowed.ravel()

    reached = np.zeros((h, w), dtype=bool)
    reached[seed.y, seed.x] = True
    reached_flat = reached.ravel()

    frontier = np.array([seed.y * w + seed.x], dtype=np.intp)
    while frontier.size:
        cols = frontier % w
        up = frontier[frontier >= w] - w
        down = frontier[frontier < (h - 1) * w] + w
        left = frontier[cols > 0] - 1
        right = frontier[cols < w - 1] + 1
        cand = np.concatenate((up, down, left, right))
        cand = np.unique(cand[allowed_flat[cand] & ~reached_flat[cand]])
        reached_flat[cand] = True
        frontier = cand
    return BinaryMask(reached)


def build_barrier(
    edges: GrayMap, annotation: PointAnnotation, config: AdaptiveMaskConfig
) -> BarrierField:
    """Union of thresholded edges and one circle ring per annotated point."""
    h, w = edges.height, edges.width
    for p in annotation.all_points():
        if not p.inside(w, h):
            raise ValueError(f"{annotation.image_id}: point {p} outside {w}x{h} image")
    blocked = binarize(edges, config.edge_threshold).bits.copy()
    radius = mask_radius(h, w, config.gamma)
    circle_points = list(annotation.foreground_points)
    if config.bound_background and annotation.background_point is not None:
        circle_points.append(annotation.background_point)
    for p in circle_points:
        blocked |= rasterize_circle(p, radius, (h, w)).bits
    return BarrierField(blocked)


def _nudge(seed: Point, blocked: np.ndarray) -> Point | None:
    """Nearest unblocked pixel in the 5x5 neighborhood; ties broken by
    (distance, dy, dx) so the choice is deterministic."""
    h, w = blocked.shape
    best = None
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            x, y = seed.x + dx, seed.y + dy
            if not (0 <= x < w and 0 <= y < h) or blocked[y, x]:
                continue
            key = (dx * dx + dy * dy, dy, dx)
            if best is None or key < best[0]:
                best = (key, Point(x, y))
    return None if best is None else best[1]


def _resolve_seed(seed: Point, blocked: np.ndarray, kind: str) -> SeedOutcome:
    if not blocked[seed.y, seed.x]:
        return SeedOutcome(seed, seed, kind, nudged=False)
    moved = _nudge(seed, blocked)
    if moved is None:
        raise EmptyFillError(
            f"{kind} seed ({seed.x},{seed.y}) is blocked and has no unblocked 5x5 neighbor"
        )
    return SeedOutcome(seed, moved, kind, nudged=True)


def generate_pseudo_label_detailed(
    image_dims: tuple[int, int],
    edges: GrayMap,
    annotation: PointAnnotation,
    config: AdaptiveMaskConfig,
    params: FloodFillParams | None = None,
) -> PseudoLabelResult:
    """Flood-fill trimap plus per-seed bookkeeping (nudges, fill sizes)."""
    h, w = image_dims
    if (edges.height, edges.width) != (h, w):
        raise ValueError(f"edge map dims {(edges.height, edges.width)} do not match {(h, w)}")
    params = params or FloodFillParams()
    barrier = build_barrier(edges, annotation, config)
    radius = mask_radius(h, w, config.gamma)

    # Barriers alone bound the fill: traverse a constant-zero field.
    zero_field = GrayMap(np.zeros((h, w)))

    seeds: list[SeedOutcome] = []
    fg_fills: list[np.ndarray] = []
    fg = np.zeros((h, w), dtype=bool)
    for p in annotation.foreground_points:
        outcome = _resolve_seed(p, barrier.blocked, "foreground")
        filled = flood_fill(outcome.used, zero_field, barrier, params)
        seeds.append(outcome)
        fg_fills.append(filled.bits)
        fg |= filled.bits

    bg = np.zeros((h, w), dtype=bool)
    if annotation.background_point is not None:
        outcome = _resolve_seed(annotation.background_point, barrier.blocked, "background")
        filled = flood_fill(outcome.used, zero_field, barrier, params)
        outcome.filled_pixels = filled.count()
        seeds.append(outcome)
        bg = filled.bits

    # Degenerate barriers can let fills meet; demote the overlap.
    overlap = fg & bg
    for outcome, fill in zip(seeds, fg_fills):
        outcome.filled_pixels = int((fill & ~overlap).sum())
    labels = np.full((h, w), UNCERTAIN, dtype=np.uint8)
    labels[fg & ~overlap] = FG
    labels[bg & ~overlap] = BG
    return PseudoLabelResult(Trimap(labels), radius, seeds)


def generate_pseudo_label(
    image_dims: tuple[int, int],
    edges: GrayMap,
    annotation: PointAnnotation,
    config: AdaptiveMaskConfig,
) -> Trimap:
    """Trimap pseudo-label: per-seed fills become FG/BG, the rest UNCERTAIN."""
    return generate_pseudo_label_detailed(image_dims, edges, annotation, config).trimap


# ---------------------------------------------------------------------------
# Annotation file: one JSON document per dataset.


@dataclass
class AnnotatedImage:
    image_id: str
    width: int
    height: int
    foreground_points: list[Point] = field(default_factory=list)
    background_point: Point | None = None
    status: str = "unlabeled"
    version: int = 0

    def complete(self) -> bool:
        return len(self.foreground_points) >= 1 and self.background_point is not None

    def annotation(self) -> PointAnnotation:
        return PointAnnotation(self.image_id, list(self.foreground_points), self.background_point)


def _parse_point(obj, where: str, width: int, height: int) -> Point:
    if not isinstance(obj, dict) or not isinstance(obj.get("x"), int) or not isinstance(obj.get("y"), int):
        raise AnnotationFormatError(f"{where}: expected {{'x': int, 'y': int}}, got {obj!r}")
    p = Point(obj["x"], obj["y"])
    if not p.inside(width, height):
        raise AnnotationFormatError(f"{where}: point ({p.x},{p.y}) outside {width}x{height} image")
    return p


def parse_annotations(doc: dict) -> list[AnnotatedImage]:
    if not isinstance(doc, dict) or not isinstance(doc.get("images"), list):
        raise AnnotationFormatError("top level must be {'images': [...]}")
    records = []
    for idx, entry in enumerate(doc["images"]):
        where = f"images[{idx}]"
        if not isinstance(entry, dict):
            raise AnnotationFormatError(f"{where}: expected an object, got {entry!r}")
        image_id = entry.get("id")
        if not isinstance(image_id, str) or not image_id:
            raise AnnotationFormatError(f"{where}.id: expected non-empty string")
        width, height = entry.get("width"), entry.get("height")
        if not isinstance(width, int) or not isinstance(height, int) or width < 1 or height < 1:
            raise AnnotationFormatError(f"{where}: width/height must be positive integers")
        fg_raw = entry.get("foreground_points", [])
        if not isinstance(fg_raw, list):
            raise AnnotationFormatError(f"{where}.foreground_points: expected a list")
        fg = [
            _parse_point(p, f"{where}.foreground_points[{i}]", width, height)
            for i, p in enumerate(fg_raw)
        ]
        bg_raw = entry.get("background_point")
        bg = None if bg_raw is None else _parse_point(bg_raw, f"{where}.background_point", width, height)
        if bg is not None and bg in fg:
            raise AnnotationFormatError(f"{where}: background point equals a foreground point")
        version = entry.get("version", 0)
        if not isinstance(version, int) or version < 0:
            raise AnnotationFormatError(f"{where}.version: expected a non-negative integer")
        status = entry.get("status") or ("done" if fg and bg is not None else "in_progress")
        records.append(AnnotatedImage(image_id, width, height, fg, bg, status, version))
    return records


def load_annotations(path: str | Path) -> list[AnnotatedImage]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise AnnotationFormatError(f"{path}: invalid JSON ({exc})") from exc
    return parse_annotations(doc)


def annotations_to_doc(records: list[AnnotatedImage]) -> dict:
    images = []
    for rec in records:
        entry = {
            "id": rec.image_id,
            "width": rec.width,
            "height": rec.height,
            "foreground_points": [{"x": p.x, "y": p.y} for p in rec.foreground_points],
            "background_point": (
                None
                if rec.background_point is None
                else {"x": rec.background_point.x, "y": rec.background_point.y}
            ),
            "status": rec.status,
            "version": rec.version,
        }
        images.append(entry)
    return {"images": images}


def save_annotations(records: list[AnnotatedImage], path: str | Path) -> None:
    """Atomic write (temp file + rename): the document on disk is always
    complete and parseable, even across crashes."""
    target = Path(path)
    payload = json.dumps(annotations_to_doc(records), indent=2) + "\n"
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(payload)
    os.replace(tmp, target)
