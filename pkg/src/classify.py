#!/usr/bin/env python3
"""
K-NN and linear SVM classifiers over standardized GLCM feature vectors.

K-NN is exhaustive (every stored vector is a candidate). The SVM is a
primal linear model trained per class (one-vs-rest) with seeded Pegasos
stochastic subgradient steps; the averaged iterate is the model.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.preprocessing import StandardScaler

from errors import (
    ConfigurationError,
    DataError,
    DegenerateTrainingError,
    DimensionMismatchError,
)
from glcm import FeatureVector

log = logging.getLogger("CLASSIFY")

DEFAULT_K = 3
DEFAULT_LAMBDA = 0.01
DEFAULT_EPOCHS = 100


def as_matrix(vectors) -> np.ndarray:
    """Stack FeatureVectors (or pass through an array) into an (n, d) float matrix"""
    if isinstance(vectors, np.ndarray):
        matrix = np.asarray(vectors, dtype=np.float64)
        return matrix.reshape(1, -1) if matrix.ndim == 1 else matrix
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64) for v in vectors]
    if not rows:
        return np.empty((0, 0))
    dims = {row.shape[0] for row in rows}
    if len(dims) != 1:
        raise DimensionMismatchError(min(dims), max(dims))
    return np.vstack(rows)


class Standardizer:
    """Per-dimension z-scoring fitted on training vectors; zero-spread dimensions pass through"""

    def __init__(self, scaler: StandardScaler):
        self._scaler = scaler

    @property
    def mean(self) -> np.ndarray:
        return self._scaler.mean_

    @property
    def std(self) -> np.ndarray:
        return self._scaler.scale_

    @property
    def dimension(self) -> int:
        return self._scaler.n_features_in_

    def transform(self, vectors) -> np.ndarray:
        matrix = as_matrix(vectors)
        if matrix.shape[1] != self.dimension:
            raise DimensionMismatchError(self.dimension, matrix.shape[1])
        return self._scaler.transform(matrix)


def fit_standardizer(train) -> Standardizer:
    matrix = as_matrix(train)
    if matrix.shape[0] < 2:
        raise ConfigurationError(f"standardizer needs at least 2 training vectors, got {matrix.shape[0]}")
    scaler = StandardScaler()
    scaler.fit(matrix)
    return Standardizer(scaler)


@dataclass(frozen=True, eq=False)
class KnnModel:
    vectors: np.ndarray
    labels: np.ndarray
    k: int

    @property
    def dimension(self):
        return self.vectors.shape[1]

    @property
    def n_classes(self):
        return int(np.unique(self.labels).size)


def knn_fit(train, labels, k: int = DEFAULT_K) -> KnnModel:
    """Lazy learner: store the vectors verbatim"""
    vectors = np.array(as_matrix(train), dtype=np.float64)
    labels = np.array(labels, dtype=np.int64)
    if vectors.shape[0] != labels.shape[0]:
        raise DimensionMismatchError(vectors.shape[0], labels.shape[0])
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if k > vectors.shape[0]:
        raise ConfigurationError(f"k = {k} exceeds the {vectors.shape[0]} training vectors")
    vectors.setflags(write=False)
    labels.setflags(write=False)
    return KnnModel(vectors, labels, k)


def _knn_vote(model: KnnModel, query: np.ndarray) -> int:
    # squared distances rank exactly like Euclidean distances
    diff = model.vectors - query
    d2 = np.einsum("ij,ij->i", diff, diff)
    nearest = np.argsort(d2, kind="stable")[: model.k]
    nearest_labels = model.labels[nearest]

    best_key, best_label = None, None
    for label in np.unique(nearest_labels):
        members = nearest[nearest_labels == label]
        key = (-members.size, d2[members].min(), int(label))
        if best_key is None or key < best_key:
            best_key, best_label = key, int(label)
    return best_label


def knn_predict(model: KnnModel, query) -> int:
    query = np.asarray(query.values if isinstance(query, FeatureVector) else query, dtype=np.float64)
    if query.shape != (model.dimension,):
        raise DimensionMismatchError(model.dimension, query.shape[-1] if query.ndim else 0)
    return _knn_vote(model, query)


def knn_predict_batch(model: KnnModel, queries) -> np.ndarray:
    matrix = as_matrix(queries)
    if matrix.size and matrix.shape[1] != model.dimension:
        raise DimensionMismatchError(model.dimension, matrix.shape[1])
    return np.array([_knn_vote(model, row) for row in matrix], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class SvmModel:
    """One (weights, bias) row per class, classes listed in label order"""

    classes: Tuple[int, ...]
    weights: np.ndarray
    biases: np.ndarray
    lam: float
    epochs: int
    seed: int

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        biases = np.array(self.biases, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != len(self.classes) or biases.shape != (len(self.classes),):
            raise DimensionMismatchError(len(self.classes), weights.shape[0])
        weights.setflags(write=False)
        biases.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def dimension(self):
        return self.weights.shape[1]


def svm_objective(weights, bias, vectors, labels, lam) -> float:
    """lam/2 * |w|^2 + mean hinge loss"""
    matrix = as_matrix(vectors)
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    hinge = np.maximum(0.0, 1.0 - y * (matrix @ w + bias))
    return float(lam / 2 * (w @ w) + hinge.mean())


def svm_train_binary(train, labels, lam: float = DEFAULT_LAMBDA, epochs: int = DEFAULT_EPOCHS,
                     seed: int = 0, sample_ids: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, float]:
    """
    Pegasos on the hinge loss with step 1/(lam * t). Only w is shrunk and
    projected onto the ball of radius 1/sqrt(lam); the bias is unregularized
    and follows the plain hinge subgradient. Each epoch visits samples in an
    order drawn from default_rng([seed, epoch]) and keyed on sample_ids, so
    reordering the training set without changing ids leaves the result
    unchanged. Returns the average of the second-half iterates.
    """
    matrix = as_matrix(train)
    y = np.asarray(labels, dtype=np.float64)
    if matrix.shape[0] != y.shape[0]:
        raise DimensionMismatchError(matrix.shape[0], y.shape[0])
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ConfigurationError("binary SVM labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise DegenerateTrainingError("binary SVM training needs both labels present")
    if epochs < 1:
        raise ConfigurationError(f"epochs must be >= 1, got {epochs}")
    if lam <= 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")

    n = matrix.shape[0]
    ids = np.arange(n) if sample_ids is None else np.asarray(sample_ids, dtype=np.int64)
    if ids.shape != (n,) or ids.min() < 0 or np.unique(ids).size != n:
        raise ConfigurationError("sample_ids must be unique non-negative integers, one per sample")

    rows = list(matrix)
    targets = y.tolist()
    radius = 1.0 / np.sqrt(lam)
    steps = epochs * n
    burn_in = steps // 2

    w = np.zeros(matrix.shape[1])
    b = 0.0
    total_w = np.zeros_like(w)
    total_b = 0.0
    t = 0
    for epoch in range(epochs):
        priorities = np.random.default_rng([seed, epoch]).random(int(ids.max()) + 1)
        order = np.argsort(priorities[ids], kind="stable")
        for i in order.tolist():
            t += 1
            x = rows[i]
            target = targets[i]
            eta = 1.0 / (lam * t)
            margin = target * (float(w @ x) + b)
            w *= 1.0 - 1.0 / t
            if margin < 1.0:
                w += (eta * target) * x
                b += eta * target
            norm = float(np.sqrt(w @ w))
            if norm > radius:
                w *= radius / norm
            if t > burn_in:
                total_w += w
                total_b += b

    averaged = steps - burn_in
    return total_w / averaged, total_b / averaged


def derive_class_seed(seed: int, label: int) -> int:
    return int(np.random.SeedSequence([seed, label]).generate_state(1, dtype=np.uint64)[0])


def svm_train_ovr(train, labels, n_classes: int, lam: float = DEFAULT_LAMBDA,
                  epochs: int = DEFAULT_EPOCHS, seed: int = 0,
                  sample_ids: Optional[Sequence[int]] = None, jobs: int = 1) -> SvmModel:
    matrix = as_matrix(train)
    labels = np.asarray(labels, dtype=np.int64)
    present = set(np.unique(labels).tolist())
    missing = [c for c in range(n_classes) if c not in present]
    if missing:
        raise ConfigurationError(f"class(es) {missing} missing from the training set")

    def train_class(label):
        binary = np.where(labels == label, 1.0, -1.0)
        return svm_train_binary(matrix, binary, lam, epochs, derive_class_seed(seed, label), sample_ids)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            fitted = list(executor.map(train_class, range(n_classes)))
    else:
        fitted = [train_class(label) for label in range(n_classes)]

    weights = np.vstack([w for w, _ in fitted])
    biases = np.array([b for _, b in fitted])
    log.debug(f"Trained {n_classes} one-vs-rest models on {matrix.shape[0]} vectors ({epochs} epochs)")
    return SvmModel(tuple(range(n_classes)), weights, biases, lam, epochs, seed)


def decision_values(model: SvmModel, queries) -> np.ndarray:
    matrix = as_matrix(queries)
    if matrix.shape[1] != model.dimension:
        raise DimensionMismatchError(model.dimension, matrix.shape[1])
    return matrix @ model.weights.T + model.biases


def svm_predict(model: SvmModel, query) -> int:
    query = np.asarray(query.values if isinstance(query, FeatureVector) else query, dtype=np.float64)
    if query.shape != (model.dimension,):
        raise DimensionMismatchError(model.dimension, query.shape[-1] if query.ndim else 0)
    scores = model.weights @ query + model.biases
    # argmax keeps the first maximum, i.e. the lowest label
    return model.classes[int(np.argmax(scores))]


def svm_predict_batch(model: SvmModel, queries) -> np.ndarray:
    scores = decision_values(model, queries)
    return np.array([model.classes[i] for i in np.argmax(scores, axis=1)], dtype=np.int64)


def _fmt(value) -> str:
    return format(float(value), ".17g")


def save_model(model: Union[KnnModel, SvmModel], path: Union[str, Path]) -> Path:
    """Header `model-type,dimension,classes,k-or-lambda`, then one row per vector or class"""
    lines = []
    if isinstance(model, KnnModel):
        lines.append(f"knn,{model.dimension},{model.n_classes},{model.k}")
        for label, row in zip(model.labels, model.vectors):
            lines.append(",".join([str(int(label))] + [_fmt(v) for v in row]))
    else:
        lines.append(f"svm,{model.dimension},{len(model.classes)},{_fmt(model.lam)}")
        for label, bias, row in zip(model.classes, model.biases, model.weights):
            lines.append(",".join([str(label), _fmt(bias)] + [_fmt(v) for v in row]))

    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_model(path: Union[str, Path]) -> Union[KnnModel, SvmModel]:
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise DataError(f"{path}: empty model file")
    kind, dimension, n_classes, param = lines[0].split(",")
    dimension = int(dimension)
    rows = [line.split(",") for line in lines[1:]]

    if kind == "knn":
        labels = [int(row[0]) for row in rows]
        vectors = np.array([[float(v) for v in row[1:]] for row in rows]).reshape(len(rows), dimension)
        return knn_fit(vectors, labels, int(param))
    if kind == "svm":
        if len(rows) != int(n_classes):
            raise DataError(f"{path}: header declares {n_classes} classes, found {len(rows)} rows")
        classes = tuple(int(row[0]) for row in rows)
        biases = np.array([float(row[1]) for row in rows])
        weights = np.array([[float(v) for v in row[2:]] for row in rows]).reshape(len(rows), dimension)
        # epochs and seed are not part of the file format
        return SvmModel(classes, weights, biases, float(param), 0, 0)
    raise DataError(f"{path}: unknown model type {kind!r}")
