"""Feed-forward softmax networks with reverse-mode input derivatives.

Multinomial logistic regression is the degenerate network with a single
Softmax layer, so it shares the same gradient path.
"""

from __future__ import annotations

import numpy as np

from ..ndcore import SeededRng
from .architectures import ArchitectureSpec
from .base import PROB_FLOOR, Classifier, softmax
from .layers import ConvMax, Flatten, Softmax


class Network(Classifier):
    kind = "network"
    differentiable = True

    def __init__(self, arch: ArchitectureSpec, params: list[dict], temperature: float = 1.0):
        self.arch = arch
        self.params = params
        self.temperature = float(temperature)
        self.in_dim = arch.in_dim
        self.classes = arch.out_dim
        self._layers = self._runtime_layers(arch)
        if len(params) != len(self._layers):
            raise ValueError("parameter list does not match architecture")

    @staticmethod
    def _runtime_layers(arch):
        layers = []
        image = arch.image_shape is not None and isinstance(arch.layers[0], ConvMax)
        for layer in arch.layers:
            if image and not isinstance(layer, ConvMax):
                layers.append(Flatten())
                image = False
            layers.append(layer)
        return layers

    @classmethod
    def init(cls, arch: ArchitectureSpec, rng: SeededRng, temperature: float = 1.0) -> "Network":
        layers = cls._runtime_layers(arch)
        shape = arch.image_shape if isinstance(layers[0], ConvMax) else (arch.in_dim,)
        params = []
        for layer in layers:
            p, shape = layer.init(rng, shape)
            params.append(p)
        return cls(arch, params, temperature)

    @classmethod
    def zeros(cls, arch: ArchitectureSpec) -> "Network":
        net = cls.init(arch, SeededRng(0))
        for p in net.params:
            for v in p.values():
                v[...] = 0.0
        return net

    def copy(self) -> "Network":
        return type(self)(self.arch, [{k: v.copy() for k, v in p.items()} for p in self.params], self.temperature)

    # -- forward / backward -------------------------------------------------

    def _reshape_in(self, X):
        if isinstance(self._layers[0], ConvMax):
            return X.reshape((X.shape[0],) + tuple(self.arch.image_shape))
        return X

    def logits(self, X, keep_cache: bool = False):
        X = self._check(X)
        h = self._reshape_in(X)
        caches = []
        for layer, p in zip(self._layers, self.params):
            h, c = layer.forward(p, h)
            if keep_cache:
                caches.append(c)
        return (h, caches) if keep_cache else h

    def predict_proba(self, X):
        return softmax(self.logits(X), self.temperature)

    def backward(self, caches, dlogits, need_params: bool = True):
        """Propagate d(loss)/d(logits) back through every layer.

        Returns ``(dX, param_grads)`` with ``dX`` flattened to ``(B, in_dim)``.
        """
        d = dlogits
        grads = [None] * len(self._layers)
        for i in range(len(self._layers) - 1, -1, -1):
            d, grads[i] = self._layers[i].backward(self.params[i], caches[i], d, need_params)
        return d.reshape(d.shape[0], -1), grads

    def _dlogits_ce(self, P, y):
        """d/dz of -log(max(P_y, floor)) for softmax outputs at temperature T."""
        n = len(P)
        G = P.copy()
        G[np.arange(n), y] -= 1.0
        floored = P[np.arange(n), y] < PROB_FLOOR
        G[floored] = 0.0
        return G / self.temperature

    def loss_and_param_grads(self, X, y, soft_targets=None):
        """Mean cross-entropy of a batch and its parameter gradients.

        With ``soft_targets`` (rows summing to one), the loss is the soft
        cross-entropy used for distillation.
        """
        Z, caches = self.logits(X, keep_cache=True)
        P = softmax(Z, self.temperature)
        n = len(P)
        if soft_targets is None:
            y = np.asarray(y, dtype=np.int64)
            loss = -np.log(np.maximum(P[np.arange(n), y], PROB_FLOOR)).mean()
            G = self._dlogits_ce(P, y)
        else:
            loss = -(soft_targets * np.log(np.maximum(P, PROB_FLOOR))).sum(axis=1).mean()
            G = (P - soft_targets) / self.temperature
        _, grads = self.backward(caches, G / n)
        return loss, grads

    def input_cost_gradient(self, X, y) -> np.ndarray:
        """Gradient of ``-log F_y(x)`` with respect to each input row."""
        single = np.asarray(X).ndim == 1
        Z, caches = self.logits(X, keep_cache=True)
        P = softmax(Z, self.temperature)
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        dX, _ = self.backward(caches, self._dlogits_ce(P, y), need_params=False)
        return dX[0] if single else dX

    def vjp(self, X, V) -> np.ndarray:
        """Row-wise vector-Jacobian products ``V[b] @ J_F(X[b])``.

        One reverse pass for the whole batch; with ``V`` one-hot at class j
        this is row j of the Jacobian.
        """
        Z, caches = self.logits(X, keep_cache=True)
        P = softmax(Z, self.temperature)
        V = np.asarray(V, dtype=np.float64)
        # softmax backward: dz = P * (v - <v, P>) / T
        dZ = P * (V - (V * P).sum(axis=1, keepdims=True)) / self.temperature
        dX, _ = self.backward(caches, dZ, need_params=False)
        return dX

    def jacobian_rows(self, X, classes) -> np.ndarray:
        X = self._check(X)
        V = np.zeros((len(X), self.classes))
        V[np.arange(len(X)), np.asarray(classes, dtype=np.int64)] = 1.0
        return self.vjp(X, V)

    def jacobian(self, x) -> np.ndarray:
        """Full ``(classes, in_dim)`` Jacobian of the probability vector at a
        single input, computed with one reverse pass per class."""
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        X = np.repeat(x, self.classes, axis=0)
        return self.vjp(X, np.eye(self.classes))

    def __repr__(self):
        return f"Network({self.arch.id}, T={self.temperature:g})"


class LogisticRegression(Network):
    """Multinomial logistic regression: ``softmax(W^T x + b)``."""

    kind = "logistic_regression"

    def __init__(self, arch: ArchitectureSpec, params: list[dict], temperature: float = 1.0):
        super().__init__(arch, params, temperature)

    @staticmethod
    def architecture(in_dim: int, classes: int) -> ArchitectureSpec:
        return ArchitectureSpec("LR", in_dim, classes, (Softmax(classes),))

    @classmethod
    def create(cls, in_dim: int, classes: int, rng: SeededRng | None = None) -> "LogisticRegression":
        arch = cls.architecture(in_dim, classes)
        if rng is None:
            return cls.zeros(arch)
        return cls.init(arch, rng)

    @property
    def W(self):
        return self.params[0]["W"]

    @property
    def b(self):
        return self.params[0]["b"]
