"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from deepdc import generate_test_backbone
from deepdc.backbone import save_image


@pytest.fixture(scope="session")
def backbone8():
    """Scale-8 deterministic test backbone shared across the session."""
    return generate_test_backbone(7, scale=8)


@pytest.fixture()
def png_factory(tmp_path):
    """Write [0,1] float images as PNGs under the test's tmp dir."""

    def write(name: str, img: np.ndarray) -> str:
        path = tmp_path / name
        save_image(img, path)
        return str(path)

    return write
