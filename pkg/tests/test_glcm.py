#!/usr/bin/env python3
"""
Tests for GLCM construction, the five features and feature combinations
"""

import math

import numpy as np
import pytest

from errors import ConfigurationError, EmptyPairError, UsageError
from glcm import (
    ANGLES,
    AngleOffset,
    FeatureCombo,
    FeatureKind,
    GlcmMatrix,
    angle_offsets,
    compute_glcm,
    compute_glcm_loops,
    contrast,
    correlation,
    energy,
    entropy,
    enumerate_combos,
    expected_pair_visits,
    extract_features,
    feature_column_names,
    homogeneity,
    marginals,
)
from imaging import GrayImage

ALL_FEATURES = (energy, contrast, homogeneity, entropy, correlation)


def brute_force_counts(image, offset):
    grid = image.pixels.tolist()
    counts = np.zeros((image.levels, image.levels), dtype=np.int64)
    for r in range(image.height):
        for c in range(image.width):
            rr, cc = r + offset.dr, c + offset.dc
            if 0 <= rr < image.height and 0 <= cc < image.width:
                counts[grid[r][c], grid[rr][cc]] += 1
                counts[grid[rr][cc], grid[r][c]] += 1
    return counts


def all_features(glcm):
    return np.array([feature(glcm) for feature in ALL_FEATURES])


def test_angle_offsets():
    deltas = [(o.dr, o.dc) for o in angle_offsets()]
    assert deltas == [(0, 1), (-1, 1), (-1, 0), (-1, -1)]
    assert [(o.dr, o.dc) for o in angle_offsets(2)] == [(0, 2), (-2, 2), (-2, 0), (-2, -2)]
    with pytest.raises(ConfigurationError):
        AngleOffset(30)


def test_derived_three_by_three():
    image = GrayImage.from_rows([[0, 0, 1], [1, 2, 2], [2, 3, 3]], 4)
    glcm = compute_glcm(image, AngleOffset(0))
    expected = np.zeros((4, 4), dtype=np.int64)
    for (i, j), n in {(0, 0): 2, (0, 1): 1, (1, 0): 1, (1, 2): 1, (2, 1): 1,
                      (2, 2): 2, (2, 3): 1, (3, 2): 1, (3, 3): 2}.items():
        expected[i, j] = n
    assert np.array_equal(glcm.counts, expected)
    assert glcm.pair_count == 12
    assert glcm.pair_visits == 6
    assert energy(glcm) == pytest.approx(18 / 144, abs=1e-15)
    assert contrast(glcm) == pytest.approx(0.5, abs=1e-15)
    assert homogeneity(glcm) == pytest.approx(0.75, abs=1e-15)
    assert entropy(glcm) == pytest.approx(0.5 * math.log(6) + 0.5 * math.log(12), abs=1e-12)
    m = marginals(glcm)
    px = expected.sum(axis=1) / 12
    mu = float(np.sum(np.arange(4) * px))
    assert m.mu_x == pytest.approx(mu, abs=1e-12)
    assert m.mu_y == pytest.approx(mu, abs=1e-12)
    assert m.sigma_x == pytest.approx(m.sigma_y, abs=1e-12)


def test_oracle_equivalence(rng, random_image):
    for _ in range(200):
        image = random_image(rng)
        for offset in angle_offsets():
            glcm = compute_glcm(image, offset)
            counts = brute_force_counts(image, offset)
            assert np.array_equal(glcm.counts, counts)
            assert np.array_equal(compute_glcm_loops(image, offset).counts, counts)
            assert np.allclose(glcm.probabilities, counts / counts.sum(), rtol=0, atol=1e-12)
            assert glcm.pair_visits == expected_pair_visits(image.width, image.height, offset)


def test_matches_scikit_image_counts(rng, random_image):
    skimage_feature = pytest.importorskip("skimage.feature")
    for _ in range(25):
        image = random_image(rng, min_side=3)
        reference = skimage_feature.graycomatrix(
            image.pixels.astype(np.uint8), [1], [0, np.pi / 4, np.pi / 2, 3 * np.pi / 4],
            levels=image.levels, symmetric=True,
        )
        ours = [compute_glcm(image, offset).counts for offset in angle_offsets()]
        theirs = [reference[:, :, 0, a].astype(np.int64) for a in range(4)]
        assert np.array_equal(ours[0], theirs[0])
        assert np.array_equal(ours[2], theirs[2])
        # the two diagonals agree as a pair; direction naming differs between libraries
        assert {ours[1].tobytes(), ours[3].tobytes()} == {theirs[1].tobytes(), theirs[3].tobytes()}


def test_normalized_and_symmetric(rng, random_image):
    for _ in range(50):
        glcm = compute_glcm(random_image(rng), AngleOffset(45))
        assert abs(glcm.probabilities.sum() - 1.0) <= 1e-12
        assert np.array_equal(glcm.counts, glcm.counts.T)


def test_constant_image_identity(constant_image):
    for offset in angle_offsets():
        glcm = compute_glcm(constant_image, offset)
        assert glcm.probabilities[3, 3] == 1.0
        assert all_features(glcm).tolist() == [1.0, 0.0, 1.0, 0.0, 0.0]
        m = marginals(glcm)
        assert (m.mu_x, m.sigma_x) == (3.0, 0.0)


def test_checkerboard_horizontal(checkerboard):
    glcm = compute_glcm(checkerboard, AngleOffset(0))
    assert glcm.probabilities.tolist() == [[0.0, 0.5], [0.5, 0.0]]
    assert energy(glcm) == 0.5
    assert contrast(glcm) == 1.0
    assert homogeneity(glcm) == 0.5
    assert entropy(glcm) == pytest.approx(math.log(2), abs=1e-12)
    assert correlation(glcm) == -1.0
    m = marginals(glcm)
    assert (m.mu_x, m.mu_y, m.sigma_x, m.sigma_y) == (0.5, 0.5, 0.5, 0.5)


def test_correlation_perfect_dependence():
    assert correlation(GlcmMatrix.from_counts([[5, 0], [0, 5]])) == 1.0


def test_uniform_glcm_entropy():
    for levels in (2, 4, 8):
        glcm = GlcmMatrix.from_counts(np.ones((levels, levels)))
        assert entropy(glcm) == pytest.approx(2 * math.log(levels), abs=1e-12)


def test_empty_glcm_rejected():
    with pytest.raises(EmptyPairError):
        GlcmMatrix.from_counts(np.zeros((3, 3)))
    with pytest.raises(EmptyPairError):
        compute_glcm(GrayImage.from_rows([[0, 1], [1, 0]], 2), AngleOffset(0, distance=2))


def test_feature_bounds(rng, random_image):
    for _ in range(500):
        image = random_image(rng)
        levels = image.levels
        for offset in angle_offsets():
            e, c, h, s, r = all_features(compute_glcm(image, offset))
            assert 0 < e <= 1 + 1e-12
            assert 0 <= c <= (levels - 1) ** 2
            assert 0 < h <= 1 + 1e-12
            assert -1e-12 <= s <= 2 * math.log(levels) + 1e-12
            assert -1 <= r <= 1


def test_constant_shift_invariance(rng, random_image):
    for _ in range(100):
        image = random_image(rng)
        shift = int(rng.integers(1, 9))
        shifted = GrayImage(image.pixels.astype(np.int64) + shift, image.levels + shift)
        for offset in angle_offsets():
            before = all_features(compute_glcm(image, offset))
            after = all_features(compute_glcm(shifted, offset))
            assert np.allclose(before, after, rtol=0, atol=1e-10)


def test_transpose_swaps_horizontal_and_vertical(rng, random_image):
    for _ in range(50):
        image = random_image(rng)
        transposed = GrayImage(image.pixels.T.copy(), image.levels)
        glcms = {o.angle_degrees: compute_glcm(image, o).counts for o in angle_offsets()}
        turned = {o.angle_degrees: compute_glcm(transposed, o).counts for o in angle_offsets()}
        assert np.array_equal(turned[0], glcms[90])
        assert np.array_equal(turned[90], glcms[0])
        assert np.array_equal(turned[45], glcms[45])
        assert np.array_equal(turned[135], glcms[135])


def test_quarter_turn_permutes_all_angles(rng, random_image):
    for _ in range(50):
        image = random_image(rng)
        rotated = GrayImage(np.rot90(image.pixels).copy(), image.levels)
        glcms = {o.angle_degrees: compute_glcm(image, o).counts for o in angle_offsets()}
        turned = {o.angle_degrees: compute_glcm(rotated, o).counts for o in angle_offsets()}
        assert np.array_equal(turned[0], glcms[90])
        assert np.array_equal(turned[90], glcms[0])
        assert np.array_equal(turned[45], glcms[135])
        assert np.array_equal(turned[135], glcms[45])


def test_combo_canonical_order_and_parse():
    combo = FeatureCombo((FeatureKind.CORRELATION, FeatureKind.ENERGY, FeatureKind.HOMOGENEITY))
    assert combo.name == "energy+homogeneity+correlation"
    assert FeatureCombo.parse("Correlation+energy+homogeneity") == combo
    assert FeatureCombo.parse("contrast+correlation+entropy").size == 3


@pytest.mark.parametrize("text", ["energy+energy", "energy", "energy+shine", "a+b+c+d",
                                  "energy+contrast+entropy+correlation"])
def test_combo_parse_errors(text):
    with pytest.raises(UsageError):
        FeatureCombo.parse(text)


def test_unknown_name_lists_valid_ones():
    with pytest.raises(UsageError, match="energy, contrast, homogeneity, entropy, correlation"):
        FeatureCombo.parse("energy+shine")


def test_enumerate_combos():
    combos = enumerate_combos()
    assert len(combos) == 20
    assert [c.size for c in combos] == [2] * 10 + [3] * 10
    assert len(set(combos)) == 20
    assert combos[0].name == "energy+contrast"
    assert combos[9].name == "entropy+correlation"
    assert combos[10].name == "energy+contrast+homogeneity"
    assert FeatureCombo.parse("energy+homogeneity+correlation") in combos
    indices = [tuple(m.index for m in c.members) for c in combos]
    assert indices[:10] == sorted(indices[:10])
    assert indices[10:] == sorted(indices[10:])


def test_extract_features_layout(checkerboard):
    combo = FeatureCombo.parse("energy+homogeneity")
    vector = extract_features(checkerboard, combo)
    assert vector.dimension == 8
    assert feature_column_names(combo)[:4] == ["energy_0", "homogeneity_0", "energy_45", "homogeneity_45"]
    glcm_0 = compute_glcm(checkerboard, AngleOffset(0))
    glcm_45 = compute_glcm(checkerboard, AngleOffset(45))
    assert vector.values[0] == energy(glcm_0)
    assert vector.values[1] == homogeneity(glcm_0)
    assert vector.values[2] == energy(glcm_45)
    assert vector.pair_visits == 4 * 3 + 3 * 3 + 3 * 4 + 3 * 3


def test_extract_features_constant(constant_image):
    vector = extract_features(constant_image, FeatureCombo.parse("contrast+correlation+entropy"))
    assert vector.dimension == 12
    assert np.all(vector.values == 0.0)
    assert vector.degenerate_correlations == len(ANGLES)


def test_extract_features_deterministic(rng, random_image):
    image = random_image(rng)
    combo = FeatureCombo.parse("energy+contrast+correlation")
    assert extract_features(image, combo) == extract_features(image, combo)


def test_pair_visit_closed_form():
    assert expected_pair_visits(64, 64, AngleOffset(0)) == 64 * 63
    assert expected_pair_visits(10, 7, AngleOffset(0)) == 7 * 9
    assert expected_pair_visits(10, 7, AngleOffset(45)) == 6 * 9
    assert expected_pair_visits(10, 7, AngleOffset(90, distance=2)) == 5 * 10
