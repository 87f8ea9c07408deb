"""HTTP service for the interactive annotation UI: image listing, live
flood-fill previews, and optimistically-versioned annotation persistence."""
from __future__ import annotations

import base64
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from .config import DatasetManifest, PipelineConfig
from .floodfill import (
    AdaptiveMaskConfig,
    AnnotatedImage,
    EmptyFillError,
    PointAnnotation,
    generate_pseudo_label_detailed,
    load_annotations,
    save_annotations,
)
from .imaging import Point, encode_trimap_png, load_gray

MAX_PREVIEW_SIDE = 2048


class PointModel(BaseModel):
    x: int
    y: int

    def to_point(self) -> Point:
        return Point(self.x, self.y)


class PreviewRequest(BaseModel):
    foreground_points: list[PointModel] = Field(min_length=1)
    background_point: PointModel | None = None
    gamma: float | None = None


class SaveRequest(BaseModel):
    foreground_points: list[PointModel] = Field(default_factory=list)
    background_point: PointModel | None = None
    expected_version: int = Field(ge=0)


class AnnotationStore:
    """Annotation records keyed by image id. Writes are serialized by one
    lock and committed with an atomic file replace, so concurrent saves with
    the same expected version admit exactly one winner."""

    def __init__(self, path: Path):
        self._path = path
        self._lock = threading.Lock()
        self._records: dict[str, AnnotatedImage] = {}
        if path.is_file():
            for rec in load_annotations(path):
                self._records[rec.image_id] = rec

    def get(self, image_id: str) -> AnnotatedImage | None:
        with self._lock:
            return self._records.get(image_id)

    def status(self, image_id: str) -> str:
        rec = self.get(image_id)
        return "unlabeled" if rec is None else rec.status

    def put(
        self,
        image_id: str,
        width: int,
        height: int,
        fg: list[Point],
        bg: Point | None,
        expected_version: int,
    ) -> tuple[bool, int]:
        """Compare-and-swap on the per-image version; returns (accepted,
        version-now)."""
        with self._lock:
            current = self._records.get(image_id)
            current_version = 0 if current is None else current.version
            if expected_version != current_version:
                return False, current_version
            version = current_version + 1
            status = "done" if fg and bg is not None else "in_progress"
            self._records[image_id] = AnnotatedImage(
                image_id, width, height, list(fg), bg, status, version
            )
            save_annotations(
                [self._records[k] for k in sorted(self._records)], self._path
            )
            return True, version


def _png_dims(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        return im.size  # (width, height)


def create_app(
    manifest: DatasetManifest,
    config: PipelineConfig | None = None,
    ui_dir: Path | None = None,
) -> FastAPI:
    config = config or PipelineConfig()
    if manifest.annotations_file is None:
        raise ValueError("the annotation service needs an annotations file path")
    store = AnnotationStore(manifest.annotations_file)
    dims: dict[str, tuple[int, int]] = {
        image_id: _png_dims(manifest.image_path(image_id))
        for image_id in manifest.image_ids()
    }

    app = FastAPI(title="pointsal annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _known(image_id: str) -> tuple[int, int]:
        if image_id not in dims:
            raise HTTPException(status_code=404, detail=f"unknown image id {image_id!r}")
        return dims[image_id]

    def _check_points(points: list[PointModel], width: int, height: int) -> None:
        for pm in points:
            if not (0 <= pm.x < width and 0 <= pm.y < height):
                raise HTTPException(
                    status_code=422,
                    detail=f"point ({pm.x},{pm.y}) outside {width}x{height} image",
                )

    @app.get("/api/images")
    def list_images() -> list[dict]:
        return [
            {
                "id": image_id,
                "width": dims[image_id][0],
                "height": dims[image_id][1],
                "status": store.status(image_id),
            }
            for image_id in sorted(dims)
        ]

    @app.get("/api/images/{image_id}/file")
    def image_file(image_id: str) -> FileResponse:
        _known(image_id)
        return FileResponse(manifest.image_path(image_id), media_type="image/png")

    @app.get("/api/images/{image_id}/edges")
    def edge_file(image_id: str) -> FileResponse:
        _known(image_id)
        path = manifest.edge_path(image_id)
        if path is None or not path.is_file():
            raise HTTPException(
                status_code=404,
                detail=f"no edge map for {image_id!r}; run `pointsal demo-edges` "
                "or point --edges at a detector output directory",
            )
        return FileResponse(path, media_type="image/png")

    @app.post("/api/images/{image_id}/preview")
    def preview(image_id: str, body: PreviewRequest) -> dict:
        width, height = _known(image_id)
        if max(width, height) > MAX_PREVIEW_SIDE:
            raise HTTPException(
                status_code=413,
                detail=f"image is {width}x{height}; previews are limited to "
                f"{MAX_PREVIEW_SIDE}px per side",
            )
        points = list(body.foreground_points)
        if body.background_point is not None:
            points.append(body.background_point)
        _check_points(points, width, height)
        edge_path = manifest.edge_path(image_id)
        if edge_path is None or not edge_path.is_file():
            raise HTTPException(
                status_code=409, detail=f"no edge map for {image_id!r}; run demo-edges first"
            )
        edges = load_gray(edge_path)
        if (edges.height, edges.width) != (height, width):
            raise HTTPException(
                status_code=409,
                detail=f"edge map dims {edges.width}x{edges.height} do not match image",
            )
        mask_config = AdaptiveMaskConfig(
            gamma=body.gamma if body.gamma is not None else config.gamma,
            edge_threshold=config.edge_threshold,
            bound_background=config.bound_background,
        )
        annotation = PointAnnotation(
            image_id,
            [pm.to_point() for pm in body.foreground_points],
            body.background_point.to_point() if body.background_point else None,
        )
        try:
            result = generate_pseudo_label_detailed(
                (height, width), edges, annotation, mask_config
            )
        except EmptyFillError as exc:
            raise HTTPException(status_code=422, detail=f"empty-fill: {exc}") from exc
        return {
            "trimap": base64.b64encode(encode_trimap_png(result.trimap)).decode("ascii"),
            "radius": result.radius,
            "dropped_seeds": [
                {"x": s.requested.x, "y": s.requested.y} for s in result.dropped_seeds()
            ],
        }

    @app.put("/api/images/{image_id}/annotation")
    def save_annotation(image_id: str, body: SaveRequest) -> dict:
        width, height = _known(image_id)
        points = list(body.foreground_points)
        if body.background_point is not None:
            points.append(body.background_point)
        _check_points(points, width, height)
        fg = [pm.to_point() for pm in body.foreground_points]
        bg = body.background_point.to_point() if body.background_point else None
        if bg is not None and bg in fg:
            raise HTTPException(
                status_code=422, detail="background point equals a foreground point"
            )
        accepted, version = store.put(image_id, width, height, fg, bg, body.expected_version)
        if not accepted:
            raise HTTPException(
                status_code=409,
                detail={"message": "version conflict", "version": version},
            )
        return {"version": version}

    @app.get("/api/images/{image_id}/annotation")
    def get_annotation(image_id: str) -> dict:
        _known(image_id)
        rec = store.get(image_id)
        if rec is None:
            return {
                "foreground_points": [],
                "background_point": None,
                "version": 0,
                "status": "unlabeled",
            }
        return {
            "foreground_points": [{"x": p.x, "y": p.y} for p in rec.foreground_points],
            "background_point": (
                None
                if rec.background_point is None
                else {"x": rec.background_point.x, "y": rec.background_point.y}
            ),
            "version": rec.version,
            "status": rec.status,
        }

    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
