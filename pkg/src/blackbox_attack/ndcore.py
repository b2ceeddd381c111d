"""Small numerical primitives shared by the rest of the package.

Everything is float64. Arrays returned here are fresh copies, so callers may
treat the results as immutable values.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ContractError", "SeededRng", "sgn", "clamp01", "argmax", "matmul", "as_vector"]


class ContractError(ValueError):
    """Raised when a precondition of a primitive is violated."""


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ContractError(f"expected a non-empty 1-d vector, got shape {v.shape}")
    return v


def sgn(m) -> np.ndarray:
    """Three-valued sign: +1, -1, or 0 for entries that are exactly zero."""
    a = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ContractError("sgn requires finite entries")
    return np.sign(a) + 0.0  # + 0.0 turns -0.0 into 0.0


def clamp01(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ContractError("clamp01 requires finite entries")
    return np.clip(a, 0.0, 1.0)


def argmax(v, axis: int | None = None):
    """Index of the largest entry, lowest index on ties.

    With ``axis`` given, works row-wise on a 2-d array (numpy's argmax already
    returns the first occurrence of the maximum).
    """
    a = np.asarray(v, dtype=np.float64)
    if a.size == 0:
        raise ContractError("argmax of an empty vector")
    if axis is None:
        if a.ndim != 1:
            raise ContractError("argmax expects a vector when axis is None")
        return int(np.argmax(a))
    return np.argmax(a, axis=axis)


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ContractError("matmul expects two matrices")
    if a.shape[1] != b.shape[0]:
        raise ContractError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


class SeededRng:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator. Child streams are derived
    through ``SeedSequence`` spawn keys, so ``rng.child(3)`` yields the same
    draws regardless of how much the parent has been used.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0, _path: tuple = ()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(_path) + (self.stream_id,)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._path)
        self.gen = np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id: int) -> "SeededRng":
        return SeededRng(self.seed, stream_id, _path=self._path)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, path={self._path})"

    # thin pass-throughs for the draws the package needs
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def permutation(self, n):
        return self.gen.permutation(n)
