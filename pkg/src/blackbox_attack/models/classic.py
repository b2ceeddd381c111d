"""Oracle-only classifiers: linear SVM, decision tree, k-nearest neighbours.

None of these expose gradients; they are targets for the attack, never
substitutes.
"""

from __future__ import annotations

import numpy as np

from .base import Classifier, softmax


class LinearSVM(Classifier):
    """One-vs-rest linear SVM. ``predict_proba`` is a softmax over the
    per-class margins, so the label is the class with the largest margin."""

    kind = "linear_svm"

    def __init__(self, W: np.ndarray, b: np.ndarray):
        self.W = np.asarray(W, dtype=np.float64)  # (in_dim, classes)
        self.b = np.asarray(b, dtype=np.float64)
        self.in_dim, self.classes = self.W.shape

    def scores(self, X):
        return self._check(X) @ self.W + self.b

    def predict_proba(self, X):
        return softmax(self.scores(X))

    @property
    def params(self):
        return {"W": self.W, "b": self.b}


class DecisionTree(Classifier):
    """Binary threshold tree stored as flat node arrays.

    Internal node ``i`` sends ``x`` left when ``x[feature[i]] <= threshold[i]``.
    Leaves have ``feature == -1`` and carry a class distribution in ``value``.
    """

    kind = "decision_tree"

    def __init__(self, feature, threshold, left, right, value, in_dim: int):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.in_dim = int(in_dim)
        self.classes = self.value.shape[1]

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = self._check(X)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X):
        return self.value[self.apply(X)].copy()

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    @property
    def params(self):
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of class-count vectors along the last axis."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / n[..., None]
        g = 1.0 - (p * p).sum(axis=-1)
    return np.where(n > 0, g, 0.0)


def best_split(X, y, classes, min_leaf, feature_block=64):
    """Exhaustive search for the threshold split minimising weighted Gini.

    Thresholds are midpoints between consecutive distinct sorted values.
    Returns ``(feature, threshold, impurity)`` or ``None`` when no split
    leaves at least ``min_leaf`` samples on both sides. Ties go to the lowest
    feature index, then the lowest threshold.
    """
    n, d = X.shape
    if n < 2 * min_leaf:
        return None
    onehot = np.eye(classes)[y]
    best = (np.inf, -1, 0.0)
    pos = np.arange(1, n)  # split after sorted position pos-1
    valid_size = (pos >= min_leaf) & (n - pos >= min_leaf)
    for f0 in range(0, d, feature_block):
        Xb = X[:, f0:f0 + feature_block]
        order = np.argsort(Xb, axis=0, kind="stable")
        xs = np.take_along_axis(Xb, order, axis=0)
        left = np.cumsum(onehot[order], axis=0)[:-1]  # (n-1, fb, C)
        right = onehot.sum(axis=0) - left
        nl = pos[:, None].astype(np.float64)
        score = (nl * gini(left) + (n - nl) * gini(right)) / n
        ok = (xs[1:] > xs[:-1]) & valid_size[:, None]
        score = np.where(ok, score, np.inf)
        flat = np.argmin(score.T)  # feature-major: lowest feature first
        fi, pi = divmod(int(flat), n - 1)
        s = score[pi, fi]
        if s < best[0]:
            thr = 0.5 * (xs[pi, fi] + xs[pi + 1, fi])
            best = (s, f0 + fi, thr)
    if not np.isfinite(best[0]):
        return None
    return best[1], best[2], best[0]


class KNN(Classifier):
    """k-nearest neighbours on raw inputs with Euclidean distance.
    ``predict_proba`` returns neighbour vote fractions; distance ties are
    broken by the lower training index."""

    kind = "knn"

    def __init__(self, X: np.ndarray, y: np.ndarray, classes: int, k: int = 3):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.k = int(k)
        self.classes = int(classes)
        self.in_dim = self.X.shape[1]
        self._sq = (self.X ** 2).sum(axis=1)

    def neighbours(self, X, chunk: int = 256) -> np.ndarray:
        X = self._check(X)
        k = min(self.k, len(self.X))
        out = np.empty((len(X), k), dtype=np.int64)
        for s in range(0, len(X), chunk):
            q = X[s:s + chunk]
            d2 = (q ** 2).sum(axis=1)[:, None] - 2.0 * q @ self.X.T + self._sq[None, :]
            part = np.argpartition(d2, k - 1, axis=1)[:, :k] if k < len(self.X) else np.tile(np.arange(len(self.X)), (len(q), 1))
            # stable order among the k candidates: by distance, then index
            dk = np.take_along_axis(d2, part, axis=1)
            order = np.lexsort((part, dk), axis=1)
            out[s:s + chunk] = np.take_along_axis(part, order, axis=1)
        return out

    def predict_proba(self, X):
        nb = self.neighbours(X)
        votes = np.zeros((len(nb), self.classes))
        np.add.at(votes, (np.repeat(np.arange(len(nb)), nb.shape[1]), self.y[nb].ravel()), 1.0)
        return votes / nb.shape[1]

    @property
    def params(self):
        return {"X": self.X, "y": self.y}
