"""Declarative pipeline configuration and dataset manifest handling."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .crf import DenseCrfParams
from .floodfill import AdaptiveMaskConfig
from .losses import GatedCrfParams, LossWeights
from .metrics import MetricOptions
from .nss import NssParams


class ValidationFailure(ValueError):
    """User input is malformed; maps to exit status 1."""


class InputOutputFailure(OSError):
    """A referenced path is missing or unreadable; maps to exit status 2."""


@dataclass
class PipelineConfig:
    gamma: float = 5.0
    edge_threshold: float = 0.5
    bound_background: bool = True
    resize: int | None = None
    nss: NssParams = field(default_factory=NssParams)
    crf: DenseCrfParams = field(default_factory=DenseCrfParams)
    gated_crf: GatedCrfParams = field(default_factory=GatedCrfParams)
    loss_weights: LossWeights = field(default_factory=LossWeights)
    metrics: MetricOptions = field(default_factory=MetricOptions)

    def mask_config(self) -> AdaptiveMaskConfig:
        return AdaptiveMaskConfig(
            gamma=self.gamma,
            edge_threshold=self.edge_threshold,
            bound_background=self.bound_background,
        )

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "edge_threshold": self.edge_threshold,
            "bound_background": self.bound_background,
            "resize": self.resize,
            "nss": dataclasses.asdict(self.nss),
            "crf": dataclasses.asdict(self.crf),
            "gated_crf": dataclasses.asdict(self.gated_crf),
            "loss_weights": dataclasses.asdict(self.loss_weights),
            "metrics": dataclasses.asdict(self.metrics),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        if not isinstance(doc, dict):
            raise ValidationFailure(f"config must be a JSON object, got {type(doc).__name__}")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationFailure(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        sections = {
            "nss": NssParams,
            "crf": DenseCrfParams,
            "gated_crf": GatedCrfParams,
            "loss_weights": LossWeights,
            "metrics": MetricOptions,
        }
        try:
            for key, value in doc.items():
                if key in sections:
                    if not isinstance(value, dict):
                        raise ValidationFailure(f"config section {key!r} must be an object")
                    kwargs[key] = sections[key](**value)
                else:
                    kwargs[key] = value
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ValidationFailure(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        p = Path(path)
        if not p.is_file():
            raise InputOutputFailure(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"{p}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


@dataclass
class DatasetManifest:
    images_dir: Path
    edges_dir: Path | None = None
    annotations_file: Path | None = None
    gt_dir: Path | None = None

    def validate(self, need_edges: bool = False, need_annotations: bool = False,
                 need_gt: bool = False) -> None:
        if not self.images_dir.is_dir():
            raise InputOutputFailure(f"images directory not found: {self.images_dir}")
        if need_edges and (self.edges_dir is None or not self.edges_dir.is_dir()):
            raise InputOutputFailure(f"edges directory not found: {self.edges_dir}")
        if need_annotations and (
            self.annotations_file is None or not self.annotations_file.is_file()
        ):
            raise InputOutputFailure(f"annotations file not found: {self.annotations_file}")
        if need_gt and (self.gt_dir is None or not self.gt_dir.is_dir()):
            raise InputOutputFailure(f"ground-truth directory not found: {self.gt_dir}")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        p = Path(path)
        if not p.is_file():
            raise InputOutputFailure(f"manifest not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"{p}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict) or "images" not in doc:
            raise ValidationFailure(f"{p}: manifest must be an object with an 'images' key")
        base = p.parent

        def resolve(key: str) -> Path | None:
            value = doc.get(key)
            if value is None:
                return None
            if not isinstance(value, str):
                raise ValidationFailure(f"{p}: manifest key {key!r} must be a path string")
            return (base / value).resolve()

        return cls(
            images_dir=resolve("images"),
            edges_dir=resolve("edges"),
            annotations_file=resolve("annotations"),
            gt_dir=resolve("gt"),
        )

    def image_ids(self) -> list[str]:
        return sorted(p.stem for p in self.images_dir.glob("*.png"))

    def image_path(self, image_id: str) -> Path:
        return self.images_dir / f"{image_id}.png"

    def edge_path(self, image_id: str) -> Path | None:
        return None if self.edges_dir is None else self.edges_dir / f"{image_id}.png"
