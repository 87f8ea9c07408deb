"""Access to the bundled 5-image mini dataset (images, edge maps, point
annotations, ground truth, and synthetic first-round saliency maps)."""
from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path

from .config import DatasetManifest


def mini_dataset_dir() -> Path:
    return Path(resources.files("pointsal") / "data" / "mini")


def mini_manifest() -> DatasetManifest:
    return DatasetManifest.load(mini_dataset_dir() / "manifest.json")


def copy_mini_dataset(dst: str | Path) -> DatasetManifest:
    """Copy the bundled dataset somewhere writable (the bundled copy lives
    inside the installed package and must stay pristine)."""
    dst = Path(dst)
    shutil.copytree(mini_dataset_dir(), dst, dirs_exist_ok=True)
    return DatasetManifest.load(dst / "manifest.json")
