"""Trainable classifiers and their derivatives.

The functional helpers below take a classifier and a single input vector;
the classifier methods they wrap also accept batches.
"""

import numpy as np

from .architectures import ARCHITECTURES, ArchitectureSpec, get_architecture, mlp
from .base import PROB_FLOOR, Classifier, UnsupportedOperation, softmax
from .classic import KNN, DecisionTree, LinearSVM
from .io import dumps, load_model, loads, save_model
from .layers import ConvMax, Dense, ReLU, Sigmoid, Softmax
from .network import LogisticRegression, Network
from .training import TrainingConfig, fit_network, train_sgd


def forward(model: Classifier, x) -> np.ndarray:
    return model.predict_proba(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def cost(model: Classifier, x, y: int) -> float:
    return float(model.cost(np.asarray(x, dtype=np.float64).reshape(1, -1), [y])[0])


def input_cost_gradient(model: Classifier, x, y: int) -> np.ndarray:
    model._require_gradients("input_cost_gradient")
    return model.input_cost_gradient(np.asarray(x, dtype=np.float64).reshape(1, -1), [y])[0]


def jacobian(model: Classifier, x) -> np.ndarray:
    model._require_gradients("jacobian")
    return model.jacobian(x)


def predict_label(model: Classifier, x) -> int:
    return int(np.argmax(forward(model, x)))


__all__ = [
    "ARCHITECTURES",
    "ArchitectureSpec",
    "Classifier",
    "ConvMax",
    "Dense",
    "DecisionTree",
    "KNN",
    "LinearSVM",
    "LogisticRegression",
    "Network",
    "PROB_FLOOR",
    "ReLU",
    "Sigmoid",
    "Softmax",
    "TrainingConfig",
    "UnsupportedOperation",
    "cost",
    "dumps",
    "fit_network",
    "forward",
    "get_architecture",
    "input_cost_gradient",
    "jacobian",
    "load_model",
    "loads",
    "mlp",
    "predict_label",
    "save_model",
    "softmax",
    "train_sgd",
]
