"""Defended oracles and white-box versus black-box evaluation.

Adversarial training interleaves one FGSM batch after every clean batch.
Defensive distillation trains a teacher with its softmax at temperature
``T``, trains a student at ``T`` on the teacher's soft labels, and deploys
the student at temperature 1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .craft import fgsm_perturb
from .models import ArchitectureSpec, Network, TrainingConfig, get_architecture
from .models.training import train_network


@dataclass(frozen=True)
class AdvTrainConfig:
    train_epsilon: float
    base: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if not 0 < self.train_epsilon <= 1:
            raise ValueError("train_epsilon must lie in (0, 1]")


@dataclass(frozen=True)
class DistillConfig:
    temperature: float
    base: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if self.temperature < 1:
            raise ValueError("temperature must be >= 1")


@dataclass(frozen=True)
class DefenseReport:
    """Misclassification rates at one attack epsilon: FGSM crafted on the
    oracle itself (``o_to_o``), on the substitute against the substitute
    (``s_to_s``) and on the substitute against the oracle (``s_to_o``)."""

    eps: float
    o_to_o: float
    s_to_s: float
    s_to_o: float
    setting: str = ""

    def __post_init__(self):
        for name in ("o_to_o", "s_to_s", "s_to_o"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


def _arch(arch) -> ArchitectureSpec:
    return arch if isinstance(arch, ArchitectureSpec) else get_architecture(arch)


def _xy(data):
    if isinstance(data, tuple):
        return data[0], data[1]
    return data.inputs, data.labels


def adversarial_train(arch, data, cfg: AdvTrainConfig) -> Network:
    """Train with an FGSM batch (true labels, current parameters) after every
    clean batch."""
    X, y = _xy(data)

    def inject(net, xb, yb):
        return fgsm_perturb(net, xb, yb, cfg.train_epsilon), yb

    return train_network(_arch(arch), X, y, cfg.base, after_batch=inject)


def soft_labels(teacher: Network, X, temperature: float) -> np.ndarray:
    t = teacher.copy()
    t.temperature = float(temperature)
    return t.predict_proba(X)


def distill_train(arch, data, cfg: DistillConfig) -> Network:
    arch = _arch(arch)
    X, y = _xy(data)
    T = cfg.temperature
    teacher = train_network(arch, X, y, cfg.base.with_rng(cfg.base.rng.child(0)), temperature=T)
    targets = soft_labels(teacher, X, T)
    student = train_network(arch, X, y, cfg.base.with_rng(cfg.base.rng.child(1)), temperature=T,
                            soft_targets=targets)
    student.temperature = 1.0
    return student


def evaluate_defense(oracle, substitute, X, y, eps_list, setting: str = "") -> list[DefenseReport]:
    """FGSM misclassification rates for each epsilon over the same samples.

    Examples are crafted against the true labels ``y``; a sample counts as
    misclassified when the attacked model's label differs from ``y``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[1] != oracle.in_dim or X.shape[1] != substitute.in_dim:
        raise ValueError("oracle, substitute and samples disagree on input dimension")
    if oracle.classes != substitute.classes:
        raise ValueError("oracle and substitute have different label spaces")
    reports = []
    for eps in eps_list:
        X_o = fgsm_perturb(oracle, X, y, eps)
        X_s = X_o if substitute is oracle else fgsm_perturb(substitute, X, y, eps)
        reports.append(DefenseReport(
            eps=float(eps),
            o_to_o=float(np.mean(oracle.predict(X_o) != y)),
            s_to_s=float(np.mean(substitute.predict(X_s) != y)),
            s_to_o=float(np.mean(oracle.predict(X_s) != y)),
            setting=setting,
        ))
    return reports


def reports_csv(reports, setting_name: str = "setting") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([setting_name, "eps_attack", "o_to_o", "s_to_s", "s_to_o"])
    for r in reports:
        w.writerow([r.setting, repr(r.eps), repr(r.o_to_o), repr(r.s_to_s), repr(r.s_to_o)])
    return buf.getvalue()
