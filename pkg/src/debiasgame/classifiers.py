"""Small deterministic classifiers, implemented directly on numpy.

All four expect a float feature matrix and 0/1 labels. Prediction ties
break toward 0 so repeated runs agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class UnsupportedAlgorithmError(ValueError):
    """Algorithm name recognized but not trainable here (or not recognized at all)."""


def _standardize(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    safe = np.where(std == 0.0, 1.0, std)
    return (X - mean) / safe


class LogisticRegressionGD:
    """Full-batch gradient descent on standardized features."""

    def __init__(self, learning_rate: float = 0.1, iterations: int = 500):
        self.learning_rate = learning_rate
        self.iterations = iterations
        self._w: Optional[np.ndarray] = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticRegressionGD":
        self._mean = X.mean(axis=0)
        self._std = X.std(axis=0)
        Xb = np.column_stack([np.ones(len(X)), _standardize(X, self._mean, self._std)])
        w = np.zeros(Xb.shape[1])
        for _ in range(self.iterations):
            p = 1.0 / (1.0 + np.exp(-(Xb @ w)))
            w -= self.learning_rate * (Xb.T @ (p - y)) / len(y)
        self._w = w
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xb = np.column_stack([np.ones(len(X)), _standardize(X, self._mean, self._std)])
        p = 1.0 / (1.0 + np.exp(-(Xb @ self._w)))
        return (p >= 0.5).astype(np.int64)


class KNearestNeighbors:
    """Majority vote of the k training rows nearest in standardized space.

    Equal distances rank by training-row index; an even vote goes to 0.
    """

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X: np.ndarray, y: np.ndarray) -> "KNearestNeighbors":
        self._mean = X.mean(axis=0)
        self._std = X.std(axis=0)
        self._train = _standardize(X, self._mean, self._std)
        self._y = np.asarray(y, dtype=np.int64)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        Z = _standardize(X, self._mean, self._std)
        out = np.empty(len(Z), dtype=np.int64)
        for i, row in enumerate(Z):
            d2 = ((self._train - row) ** 2).sum(axis=1)
            nearest = np.argsort(d2, kind="stable")[: self.k]
            votes = int(self._y[nearest].sum())
            out[i] = 1 if votes * 2 > len(nearest) else 0
        return out


def _gini(y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    p = y.mean()
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


@dataclass
class _TreeNode:
    prediction: int
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_TreeNode"] = None
    right: Optional["_TreeNode"] = None


class DecisionTree:
    """Impurity-greedy binary tree; splits are `value <= threshold` goes left."""

    def __init__(self, max_depth: int = 8):
        self.max_depth = max_depth
        self._root: Optional[_TreeNode] = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        self._root = self._grow(np.asarray(X, float), np.asarray(y, np.int64), 0)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int) -> _TreeNode:
        ones = int(y.sum())
        majority = 1 if ones * 2 > len(y) else 0
        node = _TreeNode(prediction=majority)
        if depth >= self.max_depth or ones in (0, len(y)):
            return node
        best_gain, best = 0.0, None
        parent = _gini(y)
        for j in range(X.shape[1]):
            levels = np.unique(X[:, j])
            for threshold in (levels[:-1] + levels[1:]) / 2.0:
                mask = X[:, j] <= threshold
                n_left = int(mask.sum())
                if n_left == 0 or n_left == len(y):
                    continue
                gain = parent - (n_left * _gini(y[mask])
                                 + (len(y) - n_left) * _gini(y[~mask])) / len(y)
                if gain > best_gain + 1e-12:
                    best_gain, best = gain, (j, float(threshold), mask)
        if best is None:
            return node
        j, threshold, mask = best
        node.feature, node.threshold = j, threshold
        node.left = self._grow(X[mask], y[mask], depth + 1)
        node.right = self._grow(X[~mask], y[~mask], depth + 1)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, float)
        out = np.empty(len(X), dtype=np.int64)
        for i, row in enumerate(X):
            node = self._root
            while node.left is not None:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out


class BernoulliNaiveBayes:
    """Per-feature Bernoulli likelihoods with add-one smoothing.

    Features are read as 1 when the value exceeds 0.5, so 0/1 data passes
    through unchanged.
    """

    def __init__(self, laplace: float = 1.0):
        self.laplace = laplace

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BernoulliNaiveBayes":
        Xb = (np.asarray(X, float) > 0.5).astype(np.float64)
        y = np.asarray(y, np.int64)
        self._log_prior = np.empty(2)
        self._log_on = np.empty((2, Xb.shape[1]))
        self._log_off = np.empty((2, Xb.shape[1]))
        for c in (0, 1):
            rows = Xb[y == c]
            self._log_prior[c] = np.log((len(rows) + self.laplace)
                                        / (len(y) + 2 * self.laplace))
            p = (rows.sum(axis=0) + self.laplace) / (len(rows) + 2 * self.laplace)
            self._log_on[c] = np.log(p)
            self._log_off[c] = np.log(1.0 - p)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xb = (np.asarray(X, float) > 0.5).astype(np.float64)
        scores = np.empty((len(Xb), 2))
        for c in (0, 1):
            scores[:, c] = (self._log_prior[c] + Xb @ self._log_on[c]
                            + (1.0 - Xb) @ self._log_off[c])
        # ties go to class 0
        return (scores[:, 1] > scores[:, 0]).astype(np.int64)


SUPPORTED_ALGORITHMS = ("logistic-regression", "knn", "decision-tree", "naive-bayes")
KNOWN_UNSUPPORTED = ("svm", "neural-network")


def make_classifier(algorithm: str, **params):
    """Instantiate by name; svm and neural-network are recognized but rejected."""
    if algorithm == "logistic-regression":
        return LogisticRegressionGD(**params)
    if algorithm == "knn":
        return KNearestNeighbors(**params)
    if algorithm == "decision-tree":
        return DecisionTree(**params)
    if algorithm == "naive-bayes":
        return BernoulliNaiveBayes(**params)
    if algorithm in KNOWN_UNSUPPORTED:
        raise UnsupportedAlgorithmError(f"unsupported algorithm: {algorithm}")
    raise UnsupportedAlgorithmError(f"unknown algorithm: {algorithm!r}")
