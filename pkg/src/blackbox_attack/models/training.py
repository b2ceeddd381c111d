"""Training for every classifier kind."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..ndcore import SeededRng
from .architectures import ArchitectureSpec, get_architecture
from .classic import KNN, DecisionTree, LinearSVM, best_split
from .network import LogisticRegression, Network

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 10
    learning_rate: float = 1e-2
    momentum: float = 0.9
    decay_factor: float = 0.5
    decay_every: int = 10
    batch_size: int = 32
    rng: SeededRng = field(default_factory=lambda: SeededRng(0))

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 0 or self.batch_size < 1 or self.decay_every < 1:
            raise ValueError("epochs >= 0, batch_size >= 1 and decay_every >= 1 required")

    def with_rng(self, rng: SeededRng) -> "TrainingConfig":
        return replace(self, rng=rng)

    def schedule(self, epoch: int) -> tuple[float, float]:
        """Learning rate and momentum for a (0-based) epoch; both are
        multiplied by ``decay_factor`` every ``decay_every`` epochs."""
        f = self.decay_factor ** (epoch // self.decay_every)
        return self.learning_rate * f, self.momentum * f


def _validate(X, y, classes):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(X) != len(y):
        raise ValueError("inputs and labels differ in length")
    if y.min() < 0 or y.max() >= classes:
        raise ValueError(f"labels must lie in [0, {classes})")
    return X, y


BatchHook = Callable[[Network, np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray] | None"]


def fit_network(
    net: Network,
    X,
    y,
    cfg: TrainingConfig,
    soft_targets=None,
    after_batch: BatchHook | None = None,
) -> Network:
    """Mini-batch SGD with momentum, in place on ``net``.

    ``after_batch(net, xb, yb)`` may return an extra ``(X, y)`` batch that is
    trained on immediately after the clean batch (adversarial training).
    """
    X, y = _validate(X, y, net.classes)
    velocity = [{k: np.zeros_like(v) for k, v in p.items()} for p in net.params]

    def step(lr, mom, xb, yb, tb):
        _, grads = net.loss_and_param_grads(xb, yb, tb)
        for p, g, v in zip(net.params, grads, velocity):
            for k in p:
                v[k] *= mom
                v[k] -= lr * g[k]
                p[k] += v[k]

    n = len(X)
    for epoch in range(cfg.epochs):
        lr, mom = cfg.schedule(epoch)
        order = cfg.rng.permutation(n)
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            tb = None if soft_targets is None else soft_targets[idx]
            step(lr, mom, X[idx], y[idx], tb)
            if after_batch is not None:
                extra = after_batch(net, X[idx], y[idx])
                if extra is not None:
                    step(lr, mom, extra[0], extra[1], None)
    return net


def train_network(arch: ArchitectureSpec, X, y, cfg: TrainingConfig, temperature: float = 1.0, **kw) -> Network:
    net = Network.init(arch, cfg.rng.child(0), temperature=temperature)
    return fit_network(net, X, y, cfg.with_rng(cfg.rng.child(1)), **kw)


def train_logistic_regression(X, y, classes: int, cfg: TrainingConfig) -> LogisticRegression:
    X = np.asarray(X, dtype=np.float64)
    lr = LogisticRegression.create(X.shape[1], classes, cfg.rng.child(0))
    return fit_network(lr, X, y, cfg.with_rng(cfg.rng.child(1)))


def train_linear_svm(X, y, classes: int, cfg: TrainingConfig, reg: float = 1e-4) -> LinearSVM:
    """One-vs-rest hinge loss with L2 penalty ``reg/2 * ||W||^2``, by SGD."""
    X, y = _validate(X, y, classes)
    d = X.shape[1]
    W = np.zeros((d, classes))
    b = np.zeros(classes)
    vW, vb = np.zeros_like(W), np.zeros_like(b)
    n = len(X)
    for epoch in range(cfg.epochs):
        lr, mom = cfg.schedule(epoch)
        order = cfg.rng.permutation(n)
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            xb = X[idx]
            t = -np.ones((len(idx), classes))
            t[np.arange(len(idx)), y[idx]] = 1.0
            active = (t * (xb @ W + b)) < 1.0
            G = -(t * active) / len(idx)
            gW = xb.T @ G + reg * W
            gb = G.sum(axis=0)
            vW = mom * vW - lr * gW
            vb = mom * vb - lr * gb
            W += vW
            b += vb
    return LinearSVM(W, b)


def train_decision_tree(X, y, classes: int, max_depth: int = 12, min_leaf: int = 5) -> DecisionTree:
    """Grow a Gini tree depth-first. A node becomes a leaf when it is pure,
    at ``max_depth``, or when no split keeps ``min_leaf`` samples per side."""
    X, y = _validate(X, y, classes)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts = np.bincount(y[rows], minlength=classes).astype(np.float64)
        value.append(counts / counts.sum())
        return len(feature) - 1

    stack = [(new_node(np.arange(len(X))), np.arange(len(X)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or np.all(y[rows] == y[rows[0]]):
            continue
        split = best_split(X[rows], y[rows], classes, min_leaf)
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[rows, f] <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(lrows), new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return DecisionTree(feature, threshold, left, right, np.array(value), X.shape[1])


def train_knn(X, y, classes: int, k: int = 3) -> KNN:
    X, y = _validate(X, y, classes)
    return KNN(X.copy(), y.copy(), classes, k)


KINDS = ("network", "logistic_regression", "linear_svm", "decision_tree", "knn")


def train_sgd(kind, data, cfg: TrainingConfig | None = None, **options):
    """Train any classifier kind on a labelled dataset.

    ``kind`` is an :class:`ArchitectureSpec`, a registry id such as ``"A"``
    or ``"A@0.25"``, or one of ``"logistic_regression"``, ``"linear_svm"``,
    ``"decision_tree"``, ``"knn"``. ``data`` is a ``LabeledDataset`` or an
    ``(X, y, classes)`` tuple.
    """
    cfg = cfg or TrainingConfig()
    if isinstance(data, tuple):
        X, y, classes = data
    else:
        X, y, classes = data.inputs, data.labels, data.classes
    if isinstance(kind, ArchitectureSpec) or kind not in KINDS:
        arch = kind if isinstance(kind, ArchitectureSpec) else get_architecture(kind)
        if arch.out_dim != classes:
            raise ValueError(f"architecture has {arch.out_dim} outputs but data has {classes} classes")
        return train_network(arch, X, y, cfg, **options)
    if kind == "network":
        return train_network(options.pop("arch"), X, y, cfg, **options)
    if kind == "logistic_regression":
        return train_logistic_regression(X, y, classes, cfg)
    if kind == "linear_svm":
        return train_linear_svm(X, y, classes, cfg, **options)
    if kind == "decision_tree":
        return train_decision_tree(X, y, classes, **options)
    return train_knn(X, y, classes, **options)
