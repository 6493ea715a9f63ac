#!/usr/bin/env python3
"""
Bench - the 20-combination x 2-classifier sweep, per-phase timing and
exact pair-visit counting, summary means per combination size, the
report writers, and the GLCM scaling probes.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from classify import (
    fit_standardizer,
    knn_fit,
    knn_predict_batch,
    save_model,
    svm_predict_batch,
    svm_train_ovr,
)
from config import RunConfig
from errors import CellError, ConfigurationError, DataError, GlcmLabError
from glcm import (
    CANONICAL_FEATURES,
    FEATURE_FUNCTIONS,
    FeatureCombo,
    angle_offsets,
    compute_glcm,
    compute_glcm_loops,
    enumerate_combos,
    expected_pair_visits,
    extract_features,
    feature_matrix,
)
from imaging import GrayImage, quantize, resize_nearest
from shapegen import LabeledDataset, split_dataset

log = logging.getLogger("BENCH")

CELL_COLUMNS = [
    "classifier", "combo_size", "combo", "n_train", "n_test", "accuracy",
    "extract_ms", "train_ms", "predict_ms", "glcm_cell_ops", "seed",
]
TIMING_COLUMNS = ["extract_ms", "train_ms", "predict_ms"]
SUMMARY_COLUMNS = ["classifier", "combo_size", "mean_accuracy", "cells"]
PROBE_COLUMNS = ["side", "median_ms", "cell_ops"]
FEATURE_COST_COLUMNS = ["feature", "median_us"]


class Classifier(str, Enum):
    KNN = "KNN"
    SVM = "SVM"


class BenchResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    classifier: Classifier
    combo: FeatureCombo
    accuracy: float = Field(ge=0.0, le=1.0)
    n_correct: int = Field(ge=0)
    extract_ms: float = Field(ge=0.0)
    train_ms: float = Field(ge=0.0)
    predict_ms: float = Field(ge=0.0)
    glcm_cell_ops: int = Field(gt=0)
    n_train: int = Field(ge=1)
    n_test: int = Field(ge=1)
    seed: int
    degenerate_correlations: int = 0

    @model_validator(mode="after")
    def _check_accounting(self):
        if self.n_correct > self.n_test:
            raise ValueError(f"{self.n_correct} correct out of {self.n_test} test predictions")
        return self

    @property
    def cost_ms(self) -> float:
        """Extraction plus prediction time, the ranking tiebreaker"""
        return self.extract_ms + self.predict_ms

    @property
    def total_ms(self) -> float:
        return self.extract_ms + self.train_ms + self.predict_ms

    def csv_row(self) -> Dict[str, object]:
        return {
            "classifier": self.classifier.value,
            "combo_size": self.combo.size,
            "combo": self.combo.name,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "accuracy": self.accuracy,
            "extract_ms": self.extract_ms,
            "train_ms": self.train_ms,
            "predict_ms": self.predict_ms,
            "glcm_cell_ops": self.glcm_cell_ops,
            "seed": self.seed,
        }


class SummaryRow(BaseModel):
    classifier: Classifier
    combo_size: int
    mean_accuracy: float
    cells: int


class SweepSummary(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    results: List[BenchResult]
    rows: List[SummaryRow]

    def mean(self, classifier: Union[Classifier, str], combo_size: int) -> float:
        for row in self.rows:
            if row.classifier == Classifier(classifier) and row.combo_size == combo_size:
                return row.mean_accuracy
        raise KeyError((classifier, combo_size))


class ProbeRow(BaseModel):
    side: int
    median_ms: float
    cell_ops: int


class FeatureCostRow(BaseModel):
    feature: str
    median_us: float


def prepare_dataset(dataset: LabeledDataset, side: int, levels: int) -> LabeledDataset:
    """Resize every image to side x side and quantize it to `levels` gray levels"""
    prepared = []
    for image, label in dataset.samples:
        image = resize_nearest(image, side, side)
        image = quantize(image, levels)
        prepared.append((image, label))
    return LabeledDataset(tuple(prepared), dataset.seed, dataset.split,
                          dict(dataset.config, side=side, levels=levels))


def expected_cell_ops(images: Sequence[GrayImage], distance: int = 1) -> int:
    return sum(
        expected_pair_visits(image.width, image.height, offset)
        for image in images
        for offset in angle_offsets(distance)
    )


def run_cell(dataset: LabeledDataset, combo: FeatureCombo, classifier: Union[Classifier, str],
             config: RunConfig, seed: Optional[int] = None,
             train_indices: Optional[Sequence[int]] = None,
             test_indices: Optional[Sequence[int]] = None,
             model_dir: Optional[Path] = None) -> BenchResult:
    """
    Extract, standardize, train and predict for one (combo, classifier)
    pair. Everything except the three timing fields is a pure function of
    the dataset, config and seed. Explicit index lists override the
    dataset split.
    """
    classifier = Classifier(classifier)
    seed = config.seed if seed is None else seed
    try:
        if train_indices is None or test_indices is None:
            if dataset.split is None:
                raise DataError("dataset has no train/test split")
            train_indices, test_indices = dataset.split.train, dataset.split.test
        train_indices = list(train_indices)
        test_indices = list(test_indices)
        labels = dataset.labels

        started = time.perf_counter()
        vectors = [extract_features(image, combo, config.distance) for image in dataset.images]
        extract_ms = (time.perf_counter() - started) * 1000
        cell_ops = sum(vector.pair_visits for vector in vectors)
        degenerate = sum(vector.degenerate_correlations for vector in vectors)
        matrix = feature_matrix(vectors)

        started = time.perf_counter()
        standardizer = fit_standardizer(matrix[train_indices])
        train_x = standardizer.transform(matrix[train_indices])
        train_y = labels[train_indices]
        if classifier is Classifier.KNN:
            model = knn_fit(train_x, train_y, config.knn_k)
        else:
            n_classes = int(labels.max()) + 1
            model = svm_train_ovr(train_x, train_y, n_classes, config.svm_lambda,
                                  config.svm_epochs, seed, sample_ids=train_indices)
        train_ms = (time.perf_counter() - started) * 1000

        started = time.perf_counter()
        test_x = standardizer.transform(matrix[test_indices])
        if classifier is Classifier.KNN:
            predicted = knn_predict_batch(model, test_x)
        else:
            predicted = svm_predict_batch(model, test_x)
        predict_ms = (time.perf_counter() - started) * 1000

        n_correct = int(np.sum(predicted == labels[test_indices]))
        if model_dir is not None:
            model_dir.mkdir(parents=True, exist_ok=True)
            save_model(model, model_dir / f"{classifier.value.lower()}_{combo.name}_{seed}.txt")

        result = BenchResult(
            classifier=classifier,
            combo=combo,
            accuracy=n_correct / len(test_indices),
            n_correct=n_correct,
            extract_ms=extract_ms,
            train_ms=train_ms,
            predict_ms=predict_ms,
            glcm_cell_ops=cell_ops,
            n_train=len(train_indices),
            n_test=len(test_indices),
            seed=seed,
            degenerate_correlations=degenerate,
        )
    except CellError:
        raise
    except Exception as e:
        raise CellError(classifier.value, combo.name, seed, e) from e

    log.debug(
        f"{classifier.value} {combo.name} seed {seed}: accuracy {result.accuracy:.4f} "
        f"(extract {extract_ms:.1f} ms, train {train_ms:.1f} ms, predict {predict_ms:.1f} ms)"
    )
    if degenerate:
        log.warning(f"{combo.name}: {degenerate} zero-variance correlation value(s) set to 0")
    return result


def summarize(results: Sequence[BenchResult]) -> SweepSummary:
    rows = []
    for classifier in Classifier:
        for size in (2, 3):
            members = [r.accuracy for r in results if r.classifier is classifier and r.combo.size == size]
            if members:
                rows.append(SummaryRow(
                    classifier=classifier,
                    combo_size=size,
                    mean_accuracy=float(np.mean(members)),
                    cells=len(members),
                ))
    return SweepSummary(results=list(results), rows=rows)


def sweep(dataset: LabeledDataset, config: RunConfig,
          seeds: Optional[Sequence[int]] = None, jobs: Optional[int] = None) -> SweepSummary:
    """
    Run every combination with both classifiers for each seed. The first
    seed reuses the dataset's own split when it has one; other seeds
    re-split. Results come back in (seed, combo, KNN-then-SVM) order
    whatever order the workers finish in; the first failing cell aborts
    the sweep.
    """
    seeds = list(seeds) if seeds is not None else config.sweep_seeds
    jobs = config.jobs if jobs is None else jobs
    model_dir = config.output_dir / "models" if config.save_models else None

    splits: Dict[int, LabeledDataset] = {}
    for position, seed in enumerate(seeds):
        if position == 0 and dataset.split is not None:
            splits[seed] = dataset
        else:
            splits[seed] = split_dataset(dataset, config.train_fraction, seed)

    cells: List[Tuple[int, FeatureCombo, Classifier]] = [
        (seed, combo, classifier)
        for seed in seeds
        for combo in enumerate_combos()
        for classifier in Classifier
    ]
    log.info(f"Sweeping {len(cells)} cells over {len(dataset)} images with {jobs} worker(s)")

    slots: List[Optional[BenchResult]] = [None] * len(cells)
    if jobs <= 1:
        for position, (seed, combo, classifier) in enumerate(cells):
            slots[position] = run_cell(splits[seed], combo, classifier, config, seed, model_dir=model_dir)
    else:
        executor = ThreadPoolExecutor(max_workers=jobs)
        try:
            future_to_position = {
                executor.submit(run_cell, splits[seed], combo, classifier, config, seed,
                                model_dir=model_dir): position
                for position, (seed, combo, classifier) in enumerate(cells)
            }
            for future in as_completed(future_to_position):
                slots[future_to_position[future]] = future.result()
        finally:
            executor.shutdown(wait=True, cancel_futures=True)

    summary = summarize(slots)
    for row in summary.rows:
        log.info(f"{row.classifier.value} {row.combo_size}-feature mean accuracy: "
                 f"{row.mean_accuracy:.4f} over {row.cells} cells")
    return summary


def ranking(summary: SweepSummary) -> List[BenchResult]:
    """Accuracy descending, then extraction + prediction time ascending"""
    return sorted(summary.results, key=lambda r: (-r.accuracy, r.cost_ms))


def ranking_text(summary: SweepSummary) -> str:
    lines = [
        f"{'rank':>4}  {'classifier':<10}  {'combo':<34}  {'accuracy':>8}  {'extract+predict_ms':>18}  {'seed':>6}"
    ]
    for rank, result in enumerate(ranking(summary), 1):
        lines.append(
            f"{rank:>4}  {result.classifier.value:<10}  {result.combo.name:<34}  "
            f"{result.accuracy:>8.4f}  {result.cost_ms:>18.2f}  {result.seed:>6}"
        )
    lines.append("")
    for row in summary.rows:
        lines.append(f"mean accuracy {row.classifier.value} {row.combo_size}-feature: "
                     f"{row.mean_accuracy:.4f} ({row.cells} cells)")
    return "\n".join(lines) + "\n"


def cells_frame(summary: SweepSummary) -> pd.DataFrame:
    return pd.DataFrame([r.csv_row() for r in summary.results], columns=CELL_COLUMNS)


def summary_frame(summary: SweepSummary) -> pd.DataFrame:
    rows = [
        {"classifier": r.classifier.value, "combo_size": r.combo_size,
         "mean_accuracy": r.mean_accuracy, "cells": r.cells}
        for r in summary.rows
    ]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def emit_report(summary: SweepSummary, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write cells.csv, summary.csv and ranking.txt into out_dir"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "cells": out_dir / "cells.csv",
        "summary": out_dir / "summary.csv",
        "ranking": out_dir / "ranking.txt",
    }
    cells_frame(summary).to_csv(paths["cells"], index=False)
    summary_frame(summary).to_csv(paths["summary"], index=False)
    paths["ranking"].write_text(ranking_text(summary), encoding="utf-8")
    log.info(f"Report written to {out_dir}")
    return paths


def _random_image(rng: np.random.Generator, side: int, levels: int) -> GrayImage:
    return GrayImage(rng.integers(0, levels, size=(side, side)), levels)


def complexity_probe(side_lengths: Sequence[int], levels: int = 8, trials: int = 5,
                     seed: int = 0, kernel: str = "loops", distance: int = 1) -> List[ProbeRow]:
    """
    Median time to build the four GLCMs of a random N x N image, per side
    N, with the exact pair-visit count. One warm-up build per side is
    discarded.
    """
    if len(side_lengths) < 3:
        raise ConfigurationError(f"need at least 3 side lengths, got {len(side_lengths)}")
    if min(side_lengths) < 16:
        raise ConfigurationError(f"side lengths must be >= 16, got {min(side_lengths)}")
    if trials < 5:
        raise ConfigurationError(f"need at least 5 trials, got {trials}")
    builders = {"loops": compute_glcm_loops, "vectorized": compute_glcm}
    if kernel not in builders:
        raise ConfigurationError(f"kernel must be one of {sorted(builders)}, got {kernel!r}")
    build = builders[kernel]
    offsets = angle_offsets(distance)

    rows = []
    for side in side_lengths:
        rng = np.random.default_rng([seed, side])
        timings = []
        ops = 0
        for trial in range(trials + 1):
            image = _random_image(rng, side, levels)
            started = time.perf_counter()
            glcms = [build(image, offset) for offset in offsets]
            elapsed = (time.perf_counter() - started) * 1000
            ops = sum(glcm.pair_visits for glcm in glcms)
            if trial > 0:
                timings.append(elapsed)

        expected = sum(expected_pair_visits(side, side, offset) for offset in offsets)
        if ops != expected:
            raise GlcmLabError(f"pair count {ops} differs from closed form {expected} at side {side}")
        rows.append(ProbeRow(side=side, median_ms=float(np.median(timings)), cell_ops=ops))
        log.info(f"side {side}: median {rows[-1].median_ms:.3f} ms, {ops} pair visits")
    return rows


def feature_cost_probe(levels: int = 8, trials: int = 50, side: int = 64,
                       seed: int = 0) -> List[FeatureCostRow]:
    """Median microseconds to evaluate each feature on one GLCM"""
    if trials < 5:
        raise ConfigurationError(f"need at least 5 trials, got {trials}")
    rng = np.random.default_rng([seed, side, levels])
    glcms = [
        compute_glcm(_random_image(rng, side, levels), offset)
        for _ in range(trials)
        for offset in angle_offsets()
    ]

    rows = []
    for feature in CANONICAL_FEATURES:
        evaluate = FEATURE_FUNCTIONS[feature]
        evaluate(glcms[0])
        timings = []
        for glcm in glcms:
            started = time.perf_counter()
            evaluate(glcm)
            timings.append((time.perf_counter() - started) * 1e6)
        rows.append(FeatureCostRow(feature=feature.value, median_us=float(np.median(timings))))
    return rows


def probe_frame(rows: Sequence[ProbeRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=PROBE_COLUMNS)


def feature_cost_frame(rows: Sequence[FeatureCostRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=FEATURE_COST_COLUMNS)
