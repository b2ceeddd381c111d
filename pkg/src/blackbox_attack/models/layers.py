"""Layer kinds for feed-forward classifiers.

Activations are batched and channels-last: images flow as ``(B, H, W, C)``,
flat features as ``(B, D)``. Every layer exposes

    init(rng, in_shape) -> (params, out_shape)
    forward(params, x) -> (y, cache)
    backward(params, cache, dy, need_grads=True) -> (dx, grads)

``params`` is a dict of float64 arrays (empty for parameter-free layers) and
``grads`` mirrors it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def glorot(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


@dataclass(frozen=True)
class Dense:
    units: int

    def init(self, rng, in_shape):
        (d,) = in_shape
        params = {
            "W": glorot(rng, d, self.units, (d, self.units)),
            "b": np.zeros(self.units),
        }
        return params, (self.units,)

    def forward(self, params, x):
        return x @ params["W"] + params["b"], x

    def backward(self, params, cache, dy, need_grads=True):
        x = cache
        grads = {"W": x.T @ dy, "b": dy.sum(axis=0)} if need_grads else {}
        return dy @ params["W"].T, grads


@dataclass(frozen=True)
class ReLU:
    def init(self, rng, in_shape):
        return {}, in_shape

    def forward(self, params, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, dy, need_grads=True):
        return dy * cache, {}


@dataclass(frozen=True)
class Sigmoid:
    def init(self, rng, in_shape):
        return {}, in_shape

    def forward(self, params, x):
        y = 0.5 * (1.0 + np.tanh(0.5 * x))  # overflow-free logistic
        return y, y

    def backward(self, params, cache, dy, need_grads=True):
        return dy * cache * (1.0 - cache), {}


@dataclass(frozen=True)
class Flatten:
    def init(self, rng, in_shape):
        return {}, (int(np.prod(in_shape)),)

    def forward(self, params, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, dy, need_grads=True):
        return dy.reshape(cache), {}


@dataclass(frozen=True)
class ConvMax:
    """2x2 valid convolution (stride 1), rectification, 2x2 max-pooling.

    Odd spatial sizes are floored by the pool, as with a "valid" pooling
    window. Rectification is applied after pooling; the two commute.
    """

    filters: int

    def init(self, rng, in_shape):
        h, w, c = in_shape
        if h < 3 or w < 3:
            raise ValueError(f"ConvMax needs spatial size >= 3, got {in_shape}")
        fan_in, fan_out = 4 * c, 4 * self.filters
        params = {
            "W": glorot(rng, fan_in, fan_out, (4 * c, self.filters)),
            "b": np.zeros(self.filters),
        }
        return params, ((h - 1) // 2, (w - 1) // 2, self.filters)

    @staticmethod
    def _patches(x):
        h, w = x.shape[1] - 1, x.shape[2] - 1
        return np.concatenate(
            [x[:, 0:h, 0:w], x[:, 0:h, 1:w + 1], x[:, 1:h + 1, 0:w], x[:, 1:h + 1, 1:w + 1]],
            axis=3,
        )

    def forward(self, params, x):
        h, w = x.shape[1], x.shape[2]
        cols = self._patches(x)
        conv = cols @ params["W"] + params["b"]  # (B, h-1, w-1, F)
        ph, pw = (h - 1) // 2, (w - 1) // 2
        # the four corners of each pooling window, scanned in row-major order
        quads = [conv[:, i:2 * ph:2, j:2 * pw:2] for i in (0, 1) for j in (0, 1)]
        pooled = quads[0].copy()
        idx = np.zeros(pooled.shape, dtype=np.int8)
        for k in (1, 2, 3):
            better = quads[k] > pooled  # strict: earliest corner wins ties
            pooled = np.where(better, quads[k], pooled)
            idx[better] = k
        mask = pooled > 0
        return pooled * mask, (cols, x.shape, conv.shape, idx, mask)

    def backward(self, params, cache, dy, need_grads=True):
        cols, xshape, cshape, idx, mask = cache
        b, h, w, c = xshape
        ph, pw, f = dy.shape[1], dy.shape[2], self.filters
        dy = dy * mask
        dconv = np.zeros(cshape)
        for k, (i, j) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            dconv[:, i:2 * ph:2, j:2 * pw:2] = dy * (idx == k)
        grads = {}
        if need_grads:
            flat = dconv.reshape(-1, f)
            grads = {"W": cols.reshape(-1, 4 * c).T @ flat, "b": flat.sum(axis=0)}
        dcols = dconv @ params["W"].T  # (B, h-1, w-1, 4C)
        dx = np.zeros(xshape)
        hh, ww = h - 1, w - 1
        dx[:, 0:hh, 0:ww] += dcols[..., 0:c]
        dx[:, 0:hh, 1:ww + 1] += dcols[..., c:2 * c]
        dx[:, 1:hh + 1, 0:ww] += dcols[..., 2 * c:3 * c]
        dx[:, 1:hh + 1, 1:ww + 1] += dcols[..., 3 * c:]
        return dx, grads


@dataclass(frozen=True)
class Softmax:
    """Dense projection to ``units`` classes; the softmax itself is applied
    by the network so that temperature and the fused cross-entropy gradient
    live in one place."""

    units: int

    def init(self, rng, in_shape):
        return Dense(self.units).init(rng, in_shape)

    def forward(self, params, x):
        return Dense(self.units).forward(params, x)

    def backward(self, params, cache, dy, need_grads=True):
        return Dense(self.units).backward(params, cache, dy, need_grads)


LAYER_KINDS = {
    "Dense": Dense,
    "ReLU": ReLU,
    "Sigmoid": Sigmoid,
    "Flatten": Flatten,
    "ConvMax": ConvMax,
    "Softmax": Softmax,
}


def layer_to_dict(layer) -> dict:
    d = {"kind": type(layer).__name__}
    for name in ("units", "filters"):
        if hasattr(layer, name):
            d[name] = getattr(layer, name)
    return d


def layer_from_dict(d: dict):
    d = dict(d)
    cls = LAYER_KINDS[d.pop("kind")]
    return cls(**d)
