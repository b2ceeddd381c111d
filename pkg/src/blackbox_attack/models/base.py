from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12


class UnsupportedOperation(TypeError):
    """The classifier kind does not support the requested operation
    (e.g. gradients of a decision tree)."""


class Classifier:
    """Common surface of every model kind.

    Subclasses implement :meth:`predict_proba` on a batch ``(B, in_dim)``.
    Differentiable kinds additionally implement :meth:`input_cost_gradient`,
    :meth:`vjp` and :meth:`jacobian`.
    """

    kind = "abstract"
    differentiable = False
    in_dim: int
    classes: int

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.in_dim:
            raise ValueError(f"{self.kind}: expected inputs of length {self.in_dim}, got shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X, batch_size: int = 512) -> np.ndarray:
        X = self._check(X)
        out = np.empty(len(X), dtype=np.int64)
        for s in range(0, len(X), batch_size):
            out[s:s + batch_size] = self.predict_proba(X[s:s + batch_size]).argmax(axis=1)
        return out

    def cost(self, X, y) -> np.ndarray:
        self._require_gradients("cost")
        P = self.predict_proba(X)
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        return -np.log(np.maximum(P[np.arange(len(P)), y], PROB_FLOOR))

    def _require_gradients(self, op):
        if not self.differentiable:
            raise UnsupportedOperation(f"{op} is not available for {self.kind} models")

    def input_cost_gradient(self, X, y):
        self._require_gradients("input_cost_gradient")

    def vjp(self, X, V):
        self._require_gradients("vjp")

    def jacobian(self, x):
        self._require_gradients("jacobian")


def softmax(z, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
