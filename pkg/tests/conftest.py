from __future__ import annotations

import pytest

from pointsal.config import DatasetManifest
from pointsal.minidata import copy_mini_dataset


@pytest.fixture()
def mini_copy(tmp_path) -> DatasetManifest:
    """Writable copy of the bundled mini dataset."""
    return copy_mini_dataset(tmp_path / "mini")
