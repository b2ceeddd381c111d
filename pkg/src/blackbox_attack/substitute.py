"""Substitute training against a label-only oracle.

Each substitute epoch labels the current training set through the oracle,
trains a fresh substitute on it, and grows the set by stepping points along
the sign of the substitute's Jacobian row for the oracle's label::

    S' = S  U  { clamp01(x + lam * sgn(J_F(x)[O(x)])) : x in S }

With ``max_rho`` augmentation rounds the oracle labels ``S_0 ... S_max_rho``,
which costs ``n * 2**max_rho`` queries for ``n`` seeds when nothing collides.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .models import ArchitectureSpec, LogisticRegression, Network, TrainingConfig, fit_network, get_architecture
from .models.base import UnsupportedOperation
from .ndcore import SeededRng, clamp01, sgn
from .oracle import BudgetExhausted, OracleHandle, fingerprint

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubstituteConfig:
    arch: ArchitectureSpec | str = "A"  # "LR" selects logistic regression
    lam: float = 0.1
    tau: int | None = None
    sigma: int | None = None
    kappa: int | None = None
    max_rho: int = 6
    inner_train: TrainingConfig = field(default_factory=lambda: TrainingConfig(epochs=10))
    rng: SeededRng = field(default_factory=lambda: SeededRng(0))

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_rho < 0:
            raise ValueError("max_rho must be >= 0")
        if self.tau is not None and self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.reservoir:
            if self.kappa < 1:
                raise ValueError("kappa must be >= 1")
            if self.sigma < 0 or self.sigma >= self.max_rho:
                raise ValueError("reservoir sampling needs 0 <= sigma < max_rho")

    @property
    def reservoir(self) -> bool:
        return self.kappa is not None

    def with_reservoir(self, sigma: int = 3, kappa: int = 400) -> "SubstituteConfig":
        from dataclasses import replace

        return replace(self, sigma=sigma, kappa=kappa)

    def describe(self) -> dict:
        arch = self.arch if isinstance(self.arch, str) else self.arch.id
        return {
            "arch": arch,
            "lambda": self.lam,
            "tau": self.tau,
            "sigma": self.sigma,
            "kappa": self.kappa,
            "max_rho": self.max_rho,
            "inner_epochs": self.inner_train.epochs,
            "inner_learning_rate": self.inner_train.learning_rate,
            "inner_momentum": self.inner_train.momentum,
            "inner_batch_size": self.inner_train.batch_size,
            "seed": self.rng.seed,
        }


def periodic_step(lam: float, tau: int | None, rho: int) -> float:
    """Step size for augmentation round ``rho``: ``lam * (-1)**(rho // tau)``,
    or plain ``lam`` when no period is set."""
    if tau is None:
        return lam
    if tau < 1:
        raise ValueError("tau must be >= 1")
    return -lam if (rho // tau) % 2 else lam


def predicted_query_count(n: int, rho: int, sigma: int | None = None, kappa: int | None = None,
                          rs_enabled: bool = False) -> int:
    """Distinct oracle queries needed to label ``S_rho`` from ``n`` seeds,
    assuming no collisions: ``n * 2**rho``, or ``n * 2**sigma + kappa * (rho - sigma)``
    with reservoir sampling."""
    if rho < 0 or n < 0:
        raise ValueError("n and rho must be non-negative")
    if not rs_enabled:
        return n * 2 ** rho
    if sigma is None or kappa is None:
        raise ValueError("reservoir sampling needs sigma and kappa")
    if sigma >= rho:
        raise ValueError("reservoir sampling requires sigma < rho")
    return n * 2 ** sigma + kappa * (rho - sigma)


def reservoir_select(S, kappa: int, rng: SeededRng) -> np.ndarray:
    """Indices of a uniform ``kappa``-subset of ``S`` chosen in one pass
    (Algorithm R). Returns every index when ``kappa >= len(S)``; the result
    is sorted so downstream order does not depend on reservoir slots."""
    n = len(S)
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if kappa >= n:
        return np.arange(n)
    reservoir = list(range(kappa))
    for i in range(kappa, n):
        j = int(rng.integers(0, i + 1))
        if j < kappa:
            reservoir[j] = i
    return np.sort(np.array(reservoir))


def jacobian_label_rows(F, X, labels, chunk: int = 256) -> np.ndarray:
    if not getattr(F, "differentiable", False):
        raise UnsupportedOperation(f"augmentation needs a differentiable substitute, got {F.kind}")
    out = np.empty_like(np.asarray(X, dtype=np.float64))
    for s in range(0, len(X), chunk):
        out[s:s + chunk] = F.jacobian_rows(X[s:s + chunk], labels[s:s + chunk])
    return out


def augment(F, S, labels, lam_rho: float, subset=None) -> np.ndarray:
    """One round of Jacobian-based augmentation.

    ``S`` is an ``(n, M)`` array of distinct points and ``labels`` their
    oracle labels (a sequence aligned with ``S`` or a dict keyed by
    fingerprint). Only rows in ``subset`` (default: all) spawn new points.
    Returns ``S`` followed by the new points that were not already present.
    """
    S = np.asarray(S, dtype=np.float64)
    if isinstance(labels, dict):
        labels = [labels[fingerprint(x)] for x in S]
    labels = np.asarray(labels, dtype=np.int64)
    idx = np.arange(len(S)) if subset is None else np.asarray(subset)
    if len(idx) == 0:
        return S.copy()
    rows = jacobian_label_rows(F, S[idx], labels[idx])
    candidates = clamp01(S[idx] + lam_rho * sgn(rows))
    return union(S, candidates)


def union(S, candidates) -> np.ndarray:
    seen = {fingerprint(x) for x in S}
    keep = []
    for i, x in enumerate(candidates):
        k = fingerprint(x)
        if k not in seen:
            seen.add(k)
            keep.append(i)
    return np.concatenate([S, candidates[keep]], axis=0) if keep else S.copy()


def dedupe(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return union(X[:0], X)


@dataclass
class EpochRecord:
    rho: int
    set_size: int
    new_queries: int
    cumulative_queries: int
    step: float | None
    augmented_from: int
    agreement: float | None = None


@dataclass
class SubstituteRun:
    model: object
    history: list
    S: np.ndarray
    labels: np.ndarray
    config: SubstituteConfig
    failed: bool = False

    def manifest(self) -> dict:
        return {
            "config": self.config.describe(),
            "failed": self.failed,
            "epochs": [asdict(r) for r in self.history],
        }

    def write_manifest(self, path):
        Path(path).write_text(json.dumps(self.manifest(), indent=2, sort_keys=True))


class SubstituteBudgetExhausted(BudgetExhausted):
    """Raised by :func:`train_substitute` when the oracle budget runs out;
    ``run`` holds the substitute and history up to the failure."""

    def __init__(self, message, run: SubstituteRun):
        super().__init__(message)
        self.run = run


def _new_substitute(cfg: SubstituteConfig, in_dim: int, classes: int, rng: SeededRng):
    if isinstance(cfg.arch, str) and cfg.arch.upper() == "LR":
        return LogisticRegression.create(in_dim, classes, rng)
    arch = cfg.arch if isinstance(cfg.arch, ArchitectureSpec) else get_architecture(cfg.arch)
    if arch.in_dim != in_dim or arch.out_dim != classes:
        raise ValueError(f"substitute {arch.id} is {arch.in_dim}->{arch.out_dim}, oracle is {in_dim}->{classes}")
    return Network.init(arch, rng)


def train_substitute(oracle: OracleHandle, seeds, cfg: SubstituteConfig, holdout=None,
                     eval_oracle: OracleHandle | None = None) -> SubstituteRun:
    """Run the full label / train / augment loop.

    ``holdout`` (optional inputs) is used to record, after every epoch, the
    fraction of points on which the substitute agrees with the oracle; those
    labels are charged to ``eval_oracle`` (default: a separate evaluation
    view of ``oracle``), never to the attack ledger.
    """
    S = dedupe(seeds)
    if len(S) == 0:
        raise ValueError("need at least one seed")
    if S.min() < 0 or S.max() > 1:
        raise ValueError("seeds must lie in [0, 1]")
    holdout_labels = None
    if holdout is not None:
        eval_oracle = eval_oracle or oracle.evaluation_view()
        holdout = np.asarray(holdout, dtype=np.float64)
        holdout_labels = np.asarray(eval_oracle.batch_query(holdout))

    history: list[EpochRecord] = []
    F = None
    labels = np.zeros(0, dtype=np.int64)
    start_total = oracle.ledger.total_queries
    augmented_from = len(S)
    step = None
    for rho in range(cfg.max_rho + 1):
        before = oracle.ledger.total_queries
        if rho > 0:
            oracle.ledger.new_epoch()
        try:
            labels = np.asarray(oracle.batch_query(S), dtype=np.int64)
        except BudgetExhausted as e:
            run = SubstituteRun(F, history, S, labels, cfg, failed=True)
            raise SubstituteBudgetExhausted(str(e), run) from e
        rng = cfg.rng.child(rho)
        F = _new_substitute(cfg, oracle.in_dim, oracle.classes, rng.child(0))
        fit_network(F, S, labels, cfg.inner_train.with_rng(rng.child(1)))
        rec = EpochRecord(
            rho=rho,
            set_size=len(S),
            new_queries=oracle.ledger.total_queries - before,
            cumulative_queries=oracle.ledger.total_queries - start_total,
            step=step,
            augmented_from=augmented_from,
        )
        if holdout is not None:
            rec.agreement = float(np.mean(F.predict(holdout) == holdout_labels))
        history.append(rec)
        log.info("substitute epoch %d: |S|=%d queries=%d agreement=%s", rho, len(S), rec.cumulative_queries, rec.agreement)
        if rho == cfg.max_rho:
            break
        step = periodic_step(cfg.lam, cfg.tau, rho)
        subset = None
        if cfg.reservoir and rho >= cfg.sigma:
            subset = reservoir_select(S, cfg.kappa, rng.child(2))
        augmented_from = len(S) if subset is None else len(subset)
        S = augment(F, S, labels, step, subset)
    return SubstituteRun(F, history, S, labels, cfg)
