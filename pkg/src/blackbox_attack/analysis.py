"""Attack metrics and the gradient-sign correlation study.

Metrics take an :class:`~blackbox_attack.craft.AdversarialBatch` (or any
iterable of records). Oracle-side metrics query whatever handle they are
given, so pass an evaluation view to keep the attack ledger clean.

The correlation study compares, sample by sample, the signs of the input
cost gradients of two models. Each sequence of sign matrices yields per-pixel
frequencies ``p`` and ``q`` of +1, and ``r`` of +1 in both; under
independence ``r = p * q``, which a chi-square statistic tests.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .craft import AdversarialBatch
from .models.base import UnsupportedOperation


def _as_batch(records) -> AdversarialBatch:
    if isinstance(records, AdversarialBatch):
        return records
    return AdversarialBatch.from_records(records)


def success_rate(F, records) -> float:
    """Fraction of adversarial inputs the substitute ``F`` labels differently
    from their source label."""
    b = _as_batch(records)
    if len(b) == 0:
        raise ValueError("no records")
    return float(np.mean(F.predict(b.x_star) != b.source_labels))


def transferability(oracle, records) -> float:
    """Fraction of adversarial inputs the oracle labels differently from
    their source label. Fills ``records.oracle_labels`` as a side effect
    when given a batch."""
    b = _as_batch(records)
    if len(b) == 0:
        raise ValueError("no records")
    labels = np.asarray(oracle.batch_query(b.x_star), dtype=np.int64)
    if isinstance(records, AdversarialBatch):
        records.oracle_labels = labels
    return float(np.mean(labels != b.source_labels))


def agreement(F, oracle, X) -> float:
    """Fraction of ``X`` on which ``F`` and the oracle assign the same label."""
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("empty test set")
    labels = np.asarray(oracle.batch_query(X), dtype=np.int64)
    return float(np.mean(F.predict(X) == labels))


@dataclass
class ConfusionMatrix:
    """``counts[x, y]``: number of source-class ``y`` inputs the oracle
    labelled ``x``."""

    counts: np.ndarray
    tag: str = ""

    @property
    def classes(self) -> int:
        return self.counts.shape[0]

    def normalized(self) -> np.ndarray:
        """Column-normalized shares; empty columns stay zero."""
        col = self.counts.sum(axis=0, keepdims=True).astype(np.float64)
        return np.divide(self.counts, col, out=np.zeros(self.counts.shape), where=col > 0)

    def to_csv(self, normalized: bool = True) -> str:
        M = self.normalized() if normalized else self.counts
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["oracle_label"] + [f"source_{j}" for j in range(self.classes)])
        for i, row in enumerate(M):
            w.writerow([i] + [repr(float(v)) if normalized else int(v) for v in row])
        return buf.getvalue()


def confusion(oracle, records, classes: int | None = None, tag: str = "") -> ConfusionMatrix:
    """Tally oracle labels of the adversarial inputs against source classes.
    Oracle labels already stored on a batch are reused."""
    b = _as_batch(records)
    if len(b) == 0:
        raise ValueError("no records")
    labels = b.oracle_labels
    if labels is None:
        labels = np.asarray(oracle.batch_query(b.x_star), dtype=np.int64)
    k = classes or getattr(oracle, "classes", None) or int(max(labels.max(), b.source_labels.max())) + 1
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (labels, b.source_labels), 1)
    return ConfusionMatrix(counts, tag)


# -- gradient-sign correlation -----------------------------------------------


@dataclass
class SignMatrixSequence:
    """``matrices`` is ``(N, m, n)`` with entries in {-1, +1}."""

    matrices: np.ndarray
    source: str = ""

    def __len__(self):
        return len(self.matrices)

    @property
    def dims(self) -> tuple:
        return self.matrices.shape[1:]


def sign_sequence(model, samples, labels, image_shape, source: str = "", chunk: int = 512) -> SignMatrixSequence:
    """Signs of ``grad_x cost(model, x, y)`` as ``m x n`` matrices. Zero
    entries count as +1; multi-channel images are laid out as ``m x (n*c)``."""
    if not getattr(model, "differentiable", False):
        raise UnsupportedOperation(f"sign matrices need a differentiable model, got {model.kind}")
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    m, n = image_shape[0], int(np.prod(image_shape[1:]))
    out = np.empty((len(X), m, n), dtype=np.int8)
    for s in range(0, len(X), chunk):
        g = model.input_cost_gradient(X[s:s + chunk], y[s:s + chunk])
        out[s:s + chunk] = np.where(g < 0, -1, 1).reshape(-1, m, n)
    return SignMatrixSequence(out, source)


@dataclass
class FrequencyTriple:
    """Smoothed per-entry frequencies ``(count + 1) / (N + 2)``; the raw
    counts are kept so per-class results can be pooled exactly."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    n_samples: int
    counts: tuple | None = None

    @property
    def empty(self) -> bool:
        return self.n_samples == 0

    @classmethod
    def from_counts(cls, cp, cq, cr, n):
        d = n + 2.0
        return cls((cp + 1) / d, (cq + 1) / d, (cr + 1) / d, int(n), (cp, cq, cr))

    def to_csv(self, which: str = "r") -> str:
        M = getattr(self, which)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in M:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _check_pair(s1, s2):
    if len(s1) != len(s2) or s1.dims != s2.dims:
        raise ValueError(f"sequences differ: {len(s1)}x{s1.dims} vs {len(s2)}x{s2.dims}")


def _counts(a, b):
    pa, pb = a == 1, b == 1
    return pa.sum(axis=0), pb.sum(axis=0), (pa & pb).sum(axis=0)


def frequencies(s1: SignMatrixSequence, s2: SignMatrixSequence) -> FrequencyTriple:
    _check_pair(s1, s2)
    return FrequencyTriple.from_counts(*_counts(s1.matrices, s2.matrices), len(s1))


def per_class_frequencies(s1: SignMatrixSequence, s2: SignMatrixSequence, labels, classes: int | None = None):
    """One :class:`FrequencyTriple` per source class; classes without
    samples get an ``empty`` triple."""
    _check_pair(s1, s2)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(s1):
        raise ValueError("one label per sample required")
    classes = classes or int(labels.max()) + 1
    out = []
    for c in range(classes):
        mask = labels == c
        out.append(FrequencyTriple.from_counts(*_counts(s1.matrices[mask], s2.matrices[mask]), int(mask.sum())))
    return out


@dataclass(frozen=True)
class ChiSquareResult:
    stat: float
    dof: int
    p_value: float


def chi_square_sf(stat: float, dof: int) -> float:
    """Upper tail ``P(chi2_dof > stat)`` via the regularized upper
    incomplete gamma function ``Q(dof/2, stat/2)``."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if stat <= 0:
        return 1.0
    return float(gammaincc(dof / 2.0, stat / 2.0))


def chi_square(freq: FrequencyTriple) -> ChiSquareResult:
    """``sum (r N - p q N)^2 / (p q N)`` over all entries, with
    ``(m - 1)(n - 1)`` degrees of freedom."""
    N = max(freq.n_samples, 1)
    pq = freq.p * freq.q
    stat = float(np.sum((freq.r * N - pq * N) ** 2 / (pq * N)))
    m, n = freq.p.shape
    dof = max((m - 1) * (n - 1), 1)
    return ChiSquareResult(stat, dof, chi_square_sf(stat, dof))


def random_sign_sequence(n_samples: int, dims, rng, source: str = "random") -> SignMatrixSequence:
    """Independent fair-coin sign matrices, the baseline for the test."""
    return SignMatrixSequence(np.where(rng.uniform(size=(n_samples, *dims)) < 0.5, -1, 1).astype(np.int8), source)


def chi_square_csv(rows) -> str:
    """``rows``: iterable of ``(model_a, model_b, ChiSquareResult)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model_a", "model_b", "stat", "dof", "p_value"])
    for a, b, res in rows:
        w.writerow([a, b, repr(res.stat), res.dof, repr(res.p_value)])
    return buf.getvalue()
