"""Adversarial example crafting on a differentiable substitute.

Two methods: the fast gradient sign method (every component moves by
``eps`` along the sign of the cost gradient) and the saliency-map method
(components are raised by ``eps`` one at a time in order of saliency for a
target class, until a fixed number of them has been changed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._zipio import pack, unpack
from .models.base import UnsupportedOperation
from .ndcore import SeededRng, clamp01, sgn


class SaliencyExhausted(RuntimeError):
    """No remaining component has positive saliency for the target."""

    def __init__(self, record):
        super().__init__(f"saliency exhausted after {record.components_changed} components")
        self.record = record


@dataclass(frozen=True)
class FgsmConfig:
    epsilon: float

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")


@dataclass(frozen=True)
class JsmaConfig:
    upsilon: float
    epsilon: float = 1.0
    target: int | None = None

    def __post_init__(self):
        if not 0 < self.upsilon <= 1:
            raise ValueError("upsilon must lie in (0, 1]")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")

    def max_components(self, m: int) -> int:
        return math.ceil(self.upsilon * m - 1e-9)


@dataclass
class AdversarialRecord:
    x: np.ndarray
    x_star: np.ndarray
    source_label: int
    substitute_label: int | None = None
    oracle_label: int | None = None
    components_changed: int = 0
    exhausted: bool = False

    @property
    def delta(self) -> np.ndarray:
        return self.x_star - self.x


@dataclass
class AdversarialBatch:
    """Column-oriented collection of records (all arrays share the first axis)."""

    x: np.ndarray
    x_star: np.ndarray
    source_labels: np.ndarray
    substitute_labels: np.ndarray
    oracle_labels: np.ndarray | None = None
    components_changed: np.ndarray | None = None
    exhausted: np.ndarray | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.x)
        if self.components_changed is None:
            self.components_changed = (self.x_star != self.x).sum(axis=1)
        if self.exhausted is None:
            self.exhausted = np.zeros(n, dtype=bool)

    def __len__(self):
        return len(self.x)

    @property
    def delta(self):
        return self.x_star - self.x

    def __getitem__(self, i) -> AdversarialRecord:
        return AdversarialRecord(
            self.x[i], self.x_star[i], int(self.source_labels[i]),
            int(self.substitute_labels[i]),
            None if self.oracle_labels is None else int(self.oracle_labels[i]),
            int(self.components_changed[i]), bool(self.exhausted[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_records(cls, records, config=None) -> "AdversarialBatch":
        records = list(records)
        if not records:
            raise ValueError("no records")
        oracle = None
        if all(r.oracle_label is not None for r in records):
            oracle = np.array([r.oracle_label for r in records])
        return cls(
            np.stack([r.x for r in records]), np.stack([r.x_star for r in records]),
            np.array([r.source_label for r in records]),
            np.array([-1 if r.substitute_label is None else r.substitute_label for r in records]),
            oracle,
            np.array([r.components_changed for r in records]),
            np.array([r.exhausted for r in records]),
            dict(config or {}),
        )

    def save(self, path):
        arrays = {
            "x": self.x, "x_star": self.x_star, "source_labels": self.source_labels,
            "substitute_labels": self.substitute_labels,
            "components_changed": self.components_changed, "exhausted": self.exhausted,
        }
        if self.oracle_labels is not None:
            arrays["oracle_labels"] = self.oracle_labels
        Path(path).write_bytes(pack({"config": self.config}, arrays))

    @classmethod
    def load(cls, path) -> "AdversarialBatch":
        meta, a = unpack(Path(path).read_bytes())
        return cls(a["x"], a["x_star"], a["source_labels"], a["substitute_labels"], a.get("oracle_labels"),
                   a["components_changed"], a["exhausted"], meta["config"])


def _require(F):
    if not getattr(F, "differentiable", False):
        raise UnsupportedOperation(f"crafting needs a differentiable model, got {getattr(F, 'kind', F)}")


def fgsm_perturb(F, X, y, eps: float, chunk: int = 512) -> np.ndarray:
    """``clamp01(X + eps * sgn(grad_x cost(F, X, y)))`` for a batch."""
    _require(F)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    out = np.empty_like(X)
    for s in range(0, len(X), chunk):
        g = F.input_cost_gradient(X[s:s + chunk], y[s:s + chunk])
        out[s:s + chunk] = clamp01(X[s:s + chunk] + eps * sgn(g))
    return out


def fgsm(F, x, y: int | None, eps: float, source_label: int | None = None) -> AdversarialRecord:
    """Single-input FGSM. ``y`` is the label the cost is taken against
    (the oracle's label for ``x`` in the black-box setting); ``None`` falls
    back to the substitute's own prediction."""
    FgsmConfig(eps)
    x = np.asarray(x, dtype=np.float64)
    if y is None:
        y = int(F.predict(x[None])[0])
    x_star = fgsm_perturb(F, x[None], [y], eps)[0]
    return AdversarialRecord(
        x=x, x_star=x_star, source_label=int(y if source_label is None else source_label),
        substitute_label=int(F.predict(x_star[None])[0]),
        components_changed=int((x_star != x).sum()),
    )


def fgsm_batch(F, X, y, eps: float, source_labels=None) -> AdversarialBatch:
    FgsmConfig(eps)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    X_star = fgsm_perturb(F, X, y, eps)
    src = y if source_labels is None else np.asarray(source_labels, dtype=np.int64)
    return AdversarialBatch(X, X_star, src, F.predict(X_star), config={"method": "fgsm", "epsilon": eps})


def saliency(J, t: int) -> np.ndarray:
    """Per-component saliency for raising class ``t``, from a ``(N, M)``
    Jacobian: zero where the target derivative is negative or the summed
    derivative of the other classes is positive, else their product's
    magnitude ``dF_t * |sum_{j != t} dF_j|``."""
    J = np.asarray(J, dtype=np.float64)
    if not 0 <= t < J.shape[0]:
        raise IndexError(f"target {t} out of range for {J.shape[0]} classes")
    target = J[t]
    others = J.sum(axis=0) - target
    return _saliency_from_rows(target, others)


def _saliency_from_rows(target, others):
    s = target * np.abs(others)
    return np.where((target < 0) | (others > 0), 0.0, s)


def _target_and_others(F, X, targets):
    """Row ``t`` of the Jacobian and the sum of every other row, for each
    input, via two reverse passes instead of ``N``."""
    n, k = len(X), F.classes
    onehot = np.zeros((n, k))
    onehot[np.arange(n), targets] = 1.0
    return F.vjp(X, onehot), F.vjp(X, 1.0 - onehot)


def jsma_batch(F, X, targets, cfg: JsmaConfig, source_labels=None, strict: bool = False) -> AdversarialBatch:
    """Saliency-map crafting for a batch, one component per step.

    Runs until ``ceil(upsilon * M)`` components have been changed, without
    stopping early on success. Components already at 1 cannot be raised and
    are never selected. Rows whose saliency runs out first are flagged as
    ``exhausted``; with ``strict=True`` that raises instead.
    """
    batch = jsma_sweep(F, X, targets, [cfg.upsilon], cfg.epsilon, source_labels)[0]
    if strict and batch.exhausted.any():
        raise SaliencyExhausted(batch[int(np.argmax(batch.exhausted))])
    return batch


def jsma_sweep(F, X, targets, upsilons, epsilon: float = 1.0, source_labels=None) -> list[AdversarialBatch]:
    """:func:`jsma_batch` for several distortion budgets in one pass.

    Since crafting never stops early, the run for a smaller budget is a
    prefix of the run for a larger one; each budget's batch is a snapshot
    taken when that many components have been changed.
    """
    _require(F)
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    targets = np.asarray(targets, dtype=np.int64)
    cfgs = [JsmaConfig(u, epsilon) for u in upsilons]
    budgets = [c.max_components(m) for c in cfgs]
    src = targets if source_labels is None else np.asarray(source_labels, dtype=np.int64)
    X_star = X.copy()
    changed = np.zeros((n, m), dtype=bool)
    counts = np.zeros(n, dtype=np.int64)
    exhausted = np.zeros(n, dtype=bool)
    snapshots = {}

    def snapshot(step):
        for c, b in zip(cfgs, budgets):
            if b == step and b not in snapshots:
                # rows that ran out before this budget keep their flag
                ex = exhausted & (counts < b)
                snapshots[b] = (X_star.copy(), counts.copy(), ex)

    snapshot(0)
    for step in range(1, max(budgets, default=0) + 1):
        active = np.nonzero(~exhausted)[0]
        if len(active):
            target_rows, other_rows = _target_and_others(F, X_star[active], targets[active])
            S = _saliency_from_rows(target_rows, other_rows)
            S[changed[active] | (X_star[active] >= 1.0)] = 0.0
            best = S.argmax(axis=1)  # lowest index on ties
            ok = S[np.arange(len(active)), best] > 0
            exhausted[active[~ok]] = True
            rows, cols = active[ok], best[ok]
            X_star[rows, cols] = np.minimum(X_star[rows, cols] + epsilon, 1.0)
            changed[rows, cols] = True
            counts[rows] += 1
        snapshot(step)
    out = []
    for c, b in zip(cfgs, budgets):
        xs, cnt, ex = snapshots[b]
        out.append(AdversarialBatch(
            X, xs, src, F.predict(xs), components_changed=cnt, exhausted=ex,
            config={"method": "jsma", "upsilon": c.upsilon, "epsilon": c.epsilon},
        ))
    return out


def jsma(F, x, cfg: JsmaConfig, source_label: int | None = None, strict: bool = False) -> AdversarialRecord:
    if cfg.target is None:
        raise ValueError("jsma needs a target class")
    x = np.asarray(x, dtype=np.float64)
    batch = jsma_batch(F, x[None], [cfg.target], cfg,
                       None if source_label is None else [source_label], strict=strict)
    return batch[0]


def random_targets(source_labels, classes: int, rng: SeededRng) -> np.ndarray:
    """A uniformly random target different from each source label."""
    src = np.asarray(source_labels, dtype=np.int64)
    shift = rng.integers(1, classes, size=len(src))
    return (src + shift) % classes


def l1_budget(eps: float, changed_fraction: float) -> float:
    """L1 size of a perturbation that moves ``changed_fraction`` of the
    components by ``eps`` each."""
    if not 0 < eps <= 1 or not 0 <= changed_fraction <= 1:
        raise ValueError("eps must lie in (0, 1] and changed_fraction in [0, 1]")
    return eps * changed_fraction
