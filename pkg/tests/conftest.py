#!/usr/bin/env python3
"""
Shared fixtures: src/ on the import path, small images and a tiny dataset.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parent.parent / "src"))

from imaging import GrayImage  # noqa: E402
from shapegen import generate_dataset, split_dataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def constant_image():
    return GrayImage(np.full((5, 5), 3), 8)


@pytest.fixture
def checkerboard():
    """4x4 alternating 0/1 at two levels"""
    return GrayImage(np.indices((4, 4)).sum(axis=0) % 2, 2)


@pytest.fixture
def tiny_dataset():
    """10 images per class, 16x16, 8 levels, split 90/10"""
    dataset = generate_dataset(10, 16, 8, 0.0, seed=7)
    return split_dataset(dataset, 0.9, seed=7)


@pytest.fixture
def random_image():
    """Factory for random images up to max_side x max_side and max_levels levels"""

    def make(rng, max_side=16, max_levels=8, min_side=2):
        levels = int(rng.integers(2, max_levels + 1))
        height = int(rng.integers(min_side, max_side + 1))
        width = int(rng.integers(min_side, max_side + 1))
        return GrayImage(rng.integers(0, levels, size=(height, width)), levels)

    return make
