#!/usr/bin/env python3
"""
Shapegen - deterministic synthetic triangle/square/circle dataset with a
stratified train/test split, plus the on-disk layout (PGM files + manifest).

Sample k is rendered from its own generator seeded with [seed, k], so the
dataset is identical whether it is rendered serially or by a thread pool.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import (
    ConfigurationError,
    DataError,
    DimensionError,
    LevelRangeError,
    StratificationError,
)
from imaging import GrayImage, read_pgm_file, write_pgm_file

log = logging.getLogger("SHAPEGEN")

MANIFEST_NAME = "manifest.csv"
GENERATION_NAME = "generation.env"
MIN_SIDE = 8
MIN_PER_CLASS = 10


class ShapeClass(IntEnum):
    TRIANGLE = 0
    SQUARE = 1
    CIRCLE = 2

    @property
    def slug(self):
        return self.name.lower()


# Rotational symmetry order of each outline; circles ignore rotation
_SYMMETRY = {
    ShapeClass.TRIANGLE: 2 * math.pi / 3,
    ShapeClass.SQUARE: math.pi / 2,
}


class ShapeParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape_class: ShapeClass
    rotation: float = Field(0.0, ge=0.0, lt=2 * math.pi)
    scale: float = Field(ge=0.3, le=0.9)
    center_x: float = Field(0.5, ge=0.35, le=0.65)
    center_y: float = Field(0.5, ge=0.35, le=0.65)
    foreground: int = Field(ge=0)
    background: int = Field(ge=0)
    noise_sigma: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_geometry(self):
        if self.foreground == self.background:
            raise ValueError("foreground and background must differ")
        # circumcircle of radius scale/2 must stay inside the unit square
        margin = min(self.center_x, 1 - self.center_x, self.center_y, 1 - self.center_y)
        if self.scale / 2 > margin + 1e-12:
            raise ValueError(
                f"scale {self.scale} leaves the image at center "
                f"({self.center_x}, {self.center_y})"
            )
        return self


def default_gray_pair(levels: int) -> Tuple[int, int]:
    """(foreground, background): 6 and 1 at 8 levels, scaled for finer level sets"""
    if levels < 8:
        return levels - 1, 0
    return (6 * levels) // 8, levels // 8


def render_shape(params: ShapeParams, side: int, levels: int,
                 rng: Optional[np.random.Generator] = None) -> GrayImage:
    """
    Rasterize one filled shape by testing pixel centers against the
    inverse-rotated outline. Gaussian noise, when requested, is drawn from
    rng, rounded and clamped to the level range.
    """
    if side < MIN_SIDE:
        raise DimensionError(f"side must be at least {MIN_SIDE}, got {side}")
    if params.foreground >= levels or params.background >= levels:
        raise LevelRangeError(
            f"foreground {params.foreground} / background {params.background} "
            f"outside {levels} levels"
        )

    centers = np.arange(side, dtype=np.float64) + 0.5
    rows, cols = np.meshgrid(centers, centers, indexing="ij")
    u = cols - params.center_x * side
    v = rows - params.center_y * side
    radius = params.scale * side / 2

    if params.shape_class is ShapeClass.CIRCLE:
        inside = u * u + v * v <= radius * radius
    else:
        theta = math.fmod(params.rotation, _SYMMETRY[params.shape_class])
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        ur = cos_t * u + sin_t * v
        vr = -sin_t * u + cos_t * v
        if params.shape_class is ShapeClass.SQUARE:
            half = radius / math.sqrt(2)
            inside = (np.abs(ur) <= half) & (np.abs(vr) <= half)
        else:
            # equilateral, apex up: inradius is half the circumradius
            inside = np.ones_like(ur, dtype=bool)
            for k in range(3):
                phi = math.pi / 2 + 2 * math.pi * k / 3
                inside &= math.cos(phi) * ur + math.sin(phi) * vr <= radius / 2

    canvas = np.where(inside, params.foreground, params.background).astype(np.float64)
    if params.noise_sigma > 0:
        if rng is None:
            raise ConfigurationError("noise_sigma > 0 needs an explicit noise generator")
        canvas += rng.normal(0.0, params.noise_sigma, size=canvas.shape)
        canvas = np.clip(np.rint(canvas), 0, levels - 1)

    return GrayImage(canvas.astype(np.int64), levels)


@dataclass(frozen=True)
class DatasetSplit:
    train: Tuple[int, ...]
    test: Tuple[int, ...]

    def __post_init__(self):
        train, test = set(self.train), set(self.test)
        if train & test:
            raise StratificationError(f"train and test share {len(train & test)} indices")
        object.__setattr__(self, "train", tuple(sorted(train)))
        object.__setattr__(self, "test", tuple(sorted(test)))


@dataclass(frozen=True)
class LabeledDataset:
    samples: Tuple[Tuple[GrayImage, int], ...]
    seed: int
    split: Optional[DatasetSplit] = None
    config: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.split is not None:
            covered = set(self.split.train) | set(self.split.test)
            if covered != set(range(len(self.samples))):
                raise StratificationError("split does not cover every sample index exactly once")

    def __len__(self):
        return len(self.samples)

    @property
    def images(self) -> List[GrayImage]:
        return [image for image, _ in self.samples]

    @property
    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.samples], dtype=np.int64)

    def class_counts(self, indices: Optional[Sequence[int]] = None) -> Dict[int, int]:
        labels = self.labels if indices is None else self.labels[list(indices)]
        values, counts = np.unique(labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def sample_params(seed: int, index: int, levels: int, noise_sigma: float):
    """Shape parameters for sample `index` plus its generator, which then feeds the noise"""
    rng = np.random.default_rng([seed, index])
    shape_class = ShapeClass(index % len(ShapeClass))
    center_x = rng.uniform(0.35, 0.65)
    center_y = rng.uniform(0.35, 0.65)
    margin = min(center_x, 1 - center_x, center_y, 1 - center_y)
    scale = rng.uniform(0.3, min(0.9, 2 * margin))
    rotation = rng.uniform(0.0, 2 * math.pi)
    foreground, background = default_gray_pair(levels)

    params = ShapeParams(
        shape_class=shape_class,
        rotation=rotation,
        scale=scale,
        center_x=center_x,
        center_y=center_y,
        foreground=foreground,
        background=background,
        noise_sigma=noise_sigma,
    )
    return params, rng


def _render_sample(seed, index, side, levels, noise_sigma):
    params, rng = sample_params(seed, index, levels, noise_sigma)
    return render_shape(params, side, levels, rng), int(params.shape_class)


def generate_dataset(n_per_class: int, side: int, levels: int, noise_sigma: float,
                     seed: int, jobs: int = 1) -> LabeledDataset:
    if n_per_class < MIN_PER_CLASS:
        raise ConfigurationError(f"need at least {MIN_PER_CLASS} images per class, got {n_per_class}")
    if seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {seed}")

    total = n_per_class * len(ShapeClass)
    log.info(f"Rendering {total} images ({n_per_class}/class, {side}x{side}, {levels} levels, seed {seed})")

    slots: List[Optional[Tuple[GrayImage, int]]] = [None] * total
    if jobs <= 1:
        for index in range(total):
            slots[index] = _render_sample(seed, index, side, levels, noise_sigma)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            future_to_index = {
                executor.submit(_render_sample, seed, index, side, levels, noise_sigma): index
                for index in range(total)
            }
            for future in as_completed(future_to_index):
                slots[future_to_index[future]] = future.result()

    config = {
        "n_per_class": n_per_class,
        "side": side,
        "levels": levels,
        "noise_sigma": noise_sigma,
        "seed": seed,
    }
    return LabeledDataset(tuple(slots), seed, None, config)


def split_dataset(dataset: LabeledDataset, train_fraction: float, seed: int) -> LabeledDataset:
    """
    Stratified split: each class is shuffled with its own [seed, label]
    generator and its first round(train_fraction * size) members go to
    train. Every class keeps at least one sample on each side.
    """
    if not 0 < train_fraction < 1:
        raise ConfigurationError(f"train fraction must be in (0, 1), got {train_fraction}")

    labels = dataset.labels
    train: List[int] = []
    test: List[int] = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        if members.size < 2:
            raise StratificationError(f"class {int(label)} has {members.size} sample(s), need 2")
        order = np.random.default_rng([seed, int(label)]).permutation(members)
        n_train = min(max(round(train_fraction * members.size), 1), members.size - 1)
        train.extend(int(i) for i in order[:n_train])
        test.extend(int(i) for i in order[n_train:])

    split = DatasetSplit(tuple(train), tuple(test))
    log.info(f"Split {len(dataset)} samples: {len(split.train)} train / {len(split.test)} test")
    config = dict(dataset.config, train_fraction=train_fraction, split_seed=seed)
    return replace(dataset, split=split, config=config)


def sample_filename(label: int, index: int) -> str:
    return f"{ShapeClass(label).slug}_{index:05d}.pgm"


def export_dataset_dir(dataset: LabeledDataset, out_dir: Union[str, Path]) -> Path:
    """Write <class>_<index>.pgm files, the manifest and the generation snapshot"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    train = set(dataset.split.train) if dataset.split else set()
    test = set(dataset.split.test) if dataset.split else set()
    rows = []
    for index, (image, label) in enumerate(dataset.samples):
        filename = sample_filename(label, index)
        write_pgm_file(out_dir / filename, image)
        split = "train" if index in train else "test" if index in test else ""
        rows.append({"filename": filename, "label": label, "split": split})

    pd.DataFrame(rows, columns=["filename", "label", "split"]).to_csv(
        out_dir / MANIFEST_NAME, index=False
    )
    snapshot = "".join(f"{key}={value}\n" for key, value in sorted(dataset.config.items()))
    (out_dir / GENERATION_NAME).write_text(snapshot, encoding="utf-8")

    log.info(f"Exported {len(dataset)} images to {out_dir}")
    return out_dir / MANIFEST_NAME


def load_dataset_dir(data_dir: Union[str, Path], jobs: int = 1) -> LabeledDataset:
    data_dir = Path(data_dir)
    manifest_path = data_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"no {MANIFEST_NAME} in {data_dir}")

    manifest = pd.read_csv(manifest_path, dtype={"filename": str, "split": str},
                           keep_default_na=False)
    missing = {"filename", "label", "split"} - set(manifest.columns)
    if missing:
        raise DataError(f"{manifest_path} lacks column(s) {', '.join(sorted(missing))}")

    paths = [data_dir / name for name in manifest["filename"]]
    images: List[Optional[GrayImage]] = [None] * len(paths)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        future_to_index = {executor.submit(read_pgm_file, path): i for i, path in enumerate(paths)}
        for future in as_completed(future_to_index):
            images[future_to_index[future]] = future.result()

    labels = [int(label) for label in manifest["label"]]
    snapshot = {}
    if (data_dir / GENERATION_NAME).is_file():
        snapshot = dict(dotenv_values(data_dir / GENERATION_NAME))
    seed = int(snapshot.get("seed", 0))

    split = None
    flags = list(manifest["split"])
    if flags and all(flag in ("train", "test") for flag in flags):
        split = DatasetSplit(
            tuple(i for i, flag in enumerate(flags) if flag == "train"),
            tuple(i for i, flag in enumerate(flags) if flag == "test"),
        )

    log.info(f"Loaded {len(images)} images from {data_dir}")
    return LabeledDataset(tuple(zip(images, labels)), seed, split, snapshot)
