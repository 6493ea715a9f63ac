#!/usr/bin/env python3
"""
Gray-level co-occurrence matrices and the five texture features built on
them: energy, contrast, homogeneity, entropy and correlation.

GLCMs are symmetric (each pair is counted with its transpose) and
normalized to probabilities. A feature combination is evaluated at the
four fixed angles 0, 45, 90 and 135 degrees and concatenated, angle
first, into one vector.
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import entr

from errors import ConfigurationError, DimensionError, EmptyPairError, UsageError
from imaging import GrayImage

ANGLES = (0, 45, 90, 135)

# (row delta, column delta) at distance 1, rows indexed top to bottom
_ANGLE_DELTAS = {
    0: (0, 1),
    45: (-1, 1),
    90: (-1, 0),
    135: (-1, -1),
}


class FeatureKind(Enum):
    ENERGY = "energy"
    CONTRAST = "contrast"
    HOMOGENEITY = "homogeneity"
    ENTROPY = "entropy"
    CORRELATION = "correlation"

    @property
    def index(self):
        return CANONICAL_FEATURES.index(self)


CANONICAL_FEATURES = tuple(FeatureKind)
FEATURE_NAMES = tuple(feature.value for feature in CANONICAL_FEATURES)


@dataclass(frozen=True)
class AngleOffset:
    angle_degrees: int
    distance: int = 1

    def __post_init__(self):
        if self.angle_degrees not in _ANGLE_DELTAS:
            raise ConfigurationError(f"angle must be one of {ANGLES}, got {self.angle_degrees}")
        if self.distance < 1:
            raise ConfigurationError(f"distance must be >= 1, got {self.distance}")

    @property
    def dr(self):
        return _ANGLE_DELTAS[self.angle_degrees][0] * self.distance

    @property
    def dc(self):
        return _ANGLE_DELTAS[self.angle_degrees][1] * self.distance


def angle_offsets(distance: int = 1) -> Tuple[AngleOffset, ...]:
    return tuple(AngleOffset(angle, distance) for angle in ANGLES)


def expected_pair_visits(width: int, height: int, offset: AngleOffset) -> int:
    """Closed-form number of in-bounds pixel pairs for one offset"""
    rows = max(0, height - abs(offset.dr))
    cols = max(0, width - abs(offset.dc))
    return rows * cols


@dataclass(frozen=True, eq=False)
class GlcmMatrix:
    """
    Normalized symmetric co-occurrence matrix for one offset.

    counts holds the symmetrized integer counts, probabilities = counts /
    pair_count. pair_count includes the transposed duplicates, so it is
    twice the number of pixel pairs visited.
    """

    levels: int
    counts: np.ndarray
    probabilities: np.ndarray
    pair_count: int

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "GlcmMatrix":
        counts = np.array(counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DimensionError(f"GLCM counts must be square, got shape {counts.shape}")
        total = int(counts.sum())
        if total <= 0:
            raise EmptyPairError("GLCM has no counted pairs")
        probabilities = counts / total
        counts.setflags(write=False)
        probabilities.setflags(write=False)
        return cls(counts.shape[0], counts, probabilities, total)

    @property
    def pair_visits(self):
        return self.pair_count // 2


@dataclass(frozen=True)
class GlcmMarginals:
    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float


@dataclass(frozen=True)
class FeatureCombo:
    """A 2- or 3-feature subset, members kept in canonical order"""

    members: Tuple[FeatureKind, ...]

    def __post_init__(self):
        members = tuple(FeatureKind(m) for m in self.members)
        if len(set(members)) != len(members):
            raise ConfigurationError(f"duplicate feature in combination {[m.value for m in members]}")
        if len(members) not in (2, 3):
            raise ConfigurationError(f"a combination has 2 or 3 features, got {len(members)}")
        object.__setattr__(self, "members", tuple(sorted(members, key=lambda m: m.index)))

    @classmethod
    def parse(cls, text: str) -> "FeatureCombo":
        """Parse `name+name(+name)`; bad input is a usage error"""
        names = [name.strip().lower() for name in text.split("+")]
        unknown = [name for name in names if name not in FEATURE_NAMES]
        if unknown:
            raise UsageError(
                f"unknown feature name(s) {', '.join(unknown)}; valid names: {', '.join(FEATURE_NAMES)}"
            )
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate feature in combination '{text}'")
        if len(names) not in (2, 3):
            raise UsageError(f"a combination has 2 or 3 features, got {len(names)} in '{text}'")
        return cls(tuple(FeatureKind(name) for name in names))

    @property
    def size(self):
        return len(self.members)

    @property
    def name(self):
        return "+".join(member.value for member in self.members)

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """
    Per-angle feature values of one image, ordered angle ascending then
    feature in canonical order. pair_visits and degenerate_correlations
    are extraction diagnostics.
    """

    combo: FeatureCombo
    values: np.ndarray
    pair_visits: int = 0
    degenerate_correlations: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        expected = len(ANGLES) * self.combo.size
        if values.shape != (expected,):
            raise DimensionError(f"{self.combo} vector needs {expected} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DimensionError(f"non-finite feature value in {self.combo} vector")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dimension(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.combo == other.combo and np.array_equal(self.values, other.values)


def feature_column_names(combo: FeatureCombo) -> List[str]:
    return [f"{feature.value}_{angle}" for angle in ANGLES for feature in combo.members]


def _pair_window(image: GrayImage, offset: AngleOffset):
    dr, dc = offset.dr, offset.dc
    r0, r1 = max(0, -dr), image.height - max(0, dr)
    c0, c1 = max(0, -dc), image.width - max(0, dc)
    if r1 <= r0 or c1 <= c0:
        raise EmptyPairError(
            f"{image.width}x{image.height} image has no pixel pairs at "
            f"{offset.angle_degrees} degrees, distance {offset.distance}"
        )
    return r0, r1, c0, c1


def compute_glcm(image: GrayImage, offset: AngleOffset) -> GlcmMatrix:
    r0, r1, c0, c1 = _pair_window(image, offset)
    levels = image.levels

    first = image.pixels[r0:r1, c0:c1].astype(np.int64)
    second = image.pixels[r0 + offset.dr:r1 + offset.dr, c0 + offset.dc:c1 + offset.dc]
    codes = first * levels + second
    counts = np.bincount(codes.ravel(), minlength=levels * levels).reshape(levels, levels)

    return GlcmMatrix.from_counts(counts + counts.T)


def compute_glcm_loops(image: GrayImage, offset: AngleOffset) -> GlcmMatrix:
    """Row/column double loop builder; same counts as compute_glcm"""
    r0, r1, c0, c1 = _pair_window(image, offset)
    levels = image.levels
    dr, dc = offset.dr, offset.dc
    grid = image.pixels.tolist()
    counts = [[0] * levels for _ in range(levels)]

    for r in range(r0, r1):
        row = grid[r]
        neighbor_row = grid[r + dr]
        for c in range(c0, c1):
            i = row[c]
            j = neighbor_row[c + dc]
            counts[i][j] += 1
            counts[j][i] += 1

    return GlcmMatrix.from_counts(np.array(counts, dtype=np.int64))


@lru_cache(maxsize=None)
def _index_grids(levels: int):
    index = np.arange(levels, dtype=np.float64)
    i, j = np.meshgrid(index, index, indexing="ij")
    diff2 = (i - j) ** 2
    for grid in (index, i, j, diff2):
        grid.setflags(write=False)
    return index, i, j, diff2


def energy(glcm: GlcmMatrix) -> float:
    p = glcm.probabilities
    return float(np.sum(p * p))


def contrast(glcm: GlcmMatrix) -> float:
    _, _, _, diff2 = _index_grids(glcm.levels)
    return float(np.sum(diff2 * glcm.probabilities))


def homogeneity(glcm: GlcmMatrix) -> float:
    _, _, _, diff2 = _index_grids(glcm.levels)
    return float(np.sum(glcm.probabilities / (1.0 + diff2)))


def entropy(glcm: GlcmMatrix) -> float:
    """Natural-log entropy with 0 log 0 = 0"""
    return float(np.sum(entr(glcm.probabilities)))


def marginals(glcm: GlcmMatrix) -> GlcmMarginals:
    index, _, _, _ = _index_grids(glcm.levels)
    p = glcm.probabilities
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(np.sum(index * px))
    mu_y = float(np.sum(index * py))
    sigma_x = float(np.sqrt(np.sum((index - mu_x) ** 2 * px)))
    sigma_y = float(np.sqrt(np.sum((index - mu_y) ** 2 * py)))
    return GlcmMarginals(mu_x, mu_y, sigma_x, sigma_y)


def _correlation(glcm: GlcmMatrix) -> Tuple[float, bool]:
    m = marginals(glcm)
    spread = m.sigma_x * m.sigma_y
    if spread == 0.0:
        return 0.0, True
    _, i, j, _ = _index_grids(glcm.levels)
    covariance = float(np.sum((i - m.mu_x) * (j - m.mu_y) * glcm.probabilities))
    return float(np.clip(covariance / spread, -1.0, 1.0)), False


def correlation(glcm: GlcmMatrix) -> float:
    """Pearson correlation of the index pair; 0 when either marginal has no spread"""
    return _correlation(glcm)[0]


FEATURE_FUNCTIONS = {
    FeatureKind.ENERGY: energy,
    FeatureKind.CONTRAST: contrast,
    FeatureKind.HOMOGENEITY: homogeneity,
    FeatureKind.ENTROPY: entropy,
    FeatureKind.CORRELATION: correlation,
}


def extract_features(image: GrayImage, combo: FeatureCombo, distance: int = 1) -> FeatureVector:
    values = []
    visits = 0
    degenerate = 0

    for offset in angle_offsets(distance):
        glcm = compute_glcm(image, offset)
        visits += glcm.pair_visits
        for feature in combo.members:
            if feature is FeatureKind.CORRELATION:
                value, flat = _correlation(glcm)
                degenerate += flat
            else:
                value = FEATURE_FUNCTIONS[feature](glcm)
            values.append(value)

    return FeatureVector(combo, np.array(values), visits, degenerate)


def enumerate_combos() -> List[FeatureCombo]:
    """All 10 pairs then all 10 triples, lexicographic in canonical order"""
    return [
        FeatureCombo(members)
        for size in (2, 3)
        for members in itertools.combinations(CANONICAL_FEATURES, size)
    ]


def feature_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    if not vectors:
        return np.empty((0, 0))
    return np.vstack([vector.values for vector in vectors])
