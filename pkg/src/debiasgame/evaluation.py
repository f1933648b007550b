"""Post-change evaluation: held-out accuracy and F1, plus two fairness numbers.

Individual fairness is 100 times the mean fraction of a row's k nearest
neighbours (standardized non-label features, squared Euclidean, ties by
row index) whose label differs — lower is better. Parity is 100 times
the smaller positive rate over the larger across a binary sensitive
split — higher is better.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classifiers import make_classifier
from .tabular import ColumnKind, Table, TableError


class EvaluationError(ValueError):
    """Evaluation cannot run on this input."""


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str = "logistic-regression"
    params: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    f1: float
    individual_fairness: float
    parity: float

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "individual_fairness": self.individual_fairness,
            "parity": self.parity,
        }


#: Whether a bigger value of each metric is the better one.
HIGHER_IS_BETTER = {
    "accuracy": True,
    "f1": True,
    "individual_fairness": False,
    "parity": True,
}


@dataclass(frozen=True)
class TrainEvalResult:
    predictions: np.ndarray
    test_indices: np.ndarray
    accuracy: float
    f1: float


def _split(n: int, seed: int, test_fraction: float) -> tuple[np.ndarray, np.ndarray]:
    if not (0.0 < test_fraction < 1.0):
        raise EvaluationError(f"test fraction must be in (0, 1), got {test_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        raise EvaluationError("not enough rows to split")
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def f1_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    denom = 2 * tp + fp + fn
    return (2 * tp / denom) if denom else 0.0


def train_eval(
    table: Table,
    spec: ClassifierSpec,
    split_seed: int = 0,
    test_fraction: float = 0.25,
) -> TrainEvalResult:
    """Train on a seeded split, score the held-out part."""
    label = table.label_name
    if label is None:
        raise EvaluationError("table has no label column")
    features = [n for n in table.feature_names
                if table.spec(n).kind is not ColumnKind.CATEGORICAL]
    if not features:
        raise EvaluationError("no usable feature columns")
    X = table.matrix(features)
    y = np.asarray(table.column(label), dtype=np.int64)
    train_idx, test_idx = _split(table.row_count, split_seed, test_fraction)
    y_train = y[train_idx]
    if len(set(y_train.tolist())) < 2:
        raise EvaluationError("training split holds a single class")
    model = make_classifier(spec.algorithm, **dict(spec.params))
    model.fit(X[train_idx], y_train)
    pred = model.predict(X[test_idx])
    accuracy = float((pred == y[test_idx]).mean())
    return TrainEvalResult(pred, test_idx, accuracy, f1_score(y[test_idx], pred))


def standardized_features(table: Table, exclude: Sequence[str] = ()) -> np.ndarray:
    """Non-label feature columns z-scored with population statistics."""
    names = [n for n in table.feature_names if n not in exclude]
    Z = table.matrix(names).astype(np.float64)
    mean = Z.mean(axis=0)
    std = Z.std(axis=0)
    safe = np.where(std == 0.0, 1.0, std)
    return (Z - mean) / safe


def individual_fairness(
    table: Table,
    labels: Sequence[int] | None = None,
    k: int = 10,
) -> float:
    """100 * mean fraction of each row's k nearest neighbours with a differing label."""
    n = table.row_count
    if labels is None:
        if table.label_name is None:
            raise EvaluationError("no labels given and the table has no label column")
        labels = table.column(table.label_name)
    y = np.asarray(labels, dtype=np.int64)
    if len(y) != n:
        raise EvaluationError(f"{len(y)} labels for {n} rows")
    if not (1 <= k <= n - 1):
        raise EvaluationError(f"k must be in [1, {n - 1}], got {k}")
    Z = standardized_features(table)
    disagree = 0.0
    chunk = 256
    for start in range(0, n, chunk):
        rows = Z[start:start + chunk]
        # squared distances, summed in column order
        d2 = ((rows[:, None, :] - Z[None, :, :]) ** 2).sum(axis=2)
        for i, row_d2 in enumerate(d2):
            me = start + i
            order = np.argsort(row_d2, kind="stable")
            top = order[: k + 1]
            neighbours = top[top != me][:k]
            disagree += float((y[neighbours] != y[me]).mean())
    return 100.0 * disagree / n


def parity(labels: Sequence[int], sensitive: Sequence[int]) -> float:
    """100 * smaller positive rate / larger positive rate across the binary split."""
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(sensitive, dtype=np.int64)
    if len(y) != len(s):
        raise EvaluationError(f"{len(y)} labels for {len(s)} sensitive values")
    rates = []
    for value in (0, 1):
        group = y[s == value]
        if len(group) == 0:
            raise EvaluationError(f"sensitive group {value} is empty")
        rates.append(float(group.mean()))
    low, high = min(rates), max(rates)
    if high == 0.0:
        return 100.0
    return 100.0 * low / high


def evaluate_table(
    table: Table,
    spec: ClassifierSpec,
    split_seed: int = 0,
    test_fraction: float = 0.25,
    fairness_k: int = 10,
    parity_feature: str | None = None,
) -> EvalReport:
    """Full report on one table: held-out accuracy/F1 plus the two fairness numbers."""
    result = train_eval(table, spec, split_seed, test_fraction)
    fairness = individual_fairness(table, None, fairness_k)
    if parity_feature is None:
        candidates = [n for n in table.sensitive_names
                      if table.spec(n).kind is ColumnKind.BINARY]
        if "Gender" in candidates:
            parity_feature = "Gender"
        elif candidates:
            parity_feature = candidates[0]
        else:
            raise EvaluationError("no binary sensitive column for parity")
    label = table.label_name
    p = parity(table.column(label), table.column(parity_feature))
    return EvalReport(result.accuracy, result.f1, fairness, p)
