"""Self-describing model files.

A model file is a zip archive of ``.npy`` members (readable with
``numpy.load``) plus a ``meta.json`` member holding the kind, architecture and
scalar settings. Members are written in a fixed order with a fixed timestamp,
so identical models produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

from .._zipio import pack, unpack
from .architectures import ArchitectureSpec
from .classic import KNN, DecisionTree, LinearSVM
from .network import LogisticRegression, Network

FORMAT_VERSION = 1


def _flatten(model):
    if isinstance(model, Network):
        meta = {"kind": model.kind, "arch": model.arch.to_dict(), "temperature": model.temperature}
        arrays = {f"layer{i}.{k}": v for i, p in enumerate(model.params) for k, v in sorted(p.items())}
    elif isinstance(model, LinearSVM):
        meta = {"kind": model.kind}
        arrays = {"W": model.W, "b": model.b}
    elif isinstance(model, DecisionTree):
        meta = {"kind": model.kind, "in_dim": model.in_dim}
        arrays = dict(model.params)
    elif isinstance(model, KNN):
        meta = {"kind": model.kind, "k": model.k, "classes": model.classes}
        arrays = {"X": model.X, "y": model.y}
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    meta["format"] = FORMAT_VERSION
    return meta, arrays


def dumps(model) -> bytes:
    return pack(*_flatten(model))


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(model))
    return path


def loads(data: bytes):
    meta, arrays = unpack(data)
    kind = meta["kind"]
    if kind in ("network", "logistic_regression"):
        arch = ArchitectureSpec.from_dict(meta["arch"])
        n_layers = len(Network._runtime_layers(arch))
        params = [{} for _ in range(n_layers)]
        for name, a in arrays.items():
            layer, key = name.split(".", 1)
            params[int(layer[5:])][key] = a
        cls = LogisticRegression if kind == "logistic_regression" else Network
        return cls(arch, params, meta["temperature"])
    if kind == "linear_svm":
        return LinearSVM(arrays["W"], arrays["b"])
    if kind == "decision_tree":
        return DecisionTree(
            arrays["feature"], arrays["threshold"], arrays["left"], arrays["right"], arrays["value"], meta["in_dim"]
        )
    if kind == "knn":
        return KNN(arrays["X"], arrays["y"], meta["classes"], meta["k"])
    raise ValueError(f"unknown model kind {kind!r}")


def load_model(path):
    return loads(Path(path).read_bytes())
