"""Datasets: IDX and CSV ingestion, synthetic blobs, seed-set extraction."""

from __future__ import annotations

import csv
import gzip
import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ndcore import SeededRng

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049


class DataFormatError(ValueError):
    pass


@dataclass
class LabeledDataset:
    inputs: np.ndarray  # (n, M), entries in [0, 1]
    labels: np.ndarray  # (n,), ints in [0, classes)
    image_shape: tuple  # (m, n, channels)
    classes: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.image_shape = tuple(int(s) for s in self.image_shape)
        if self.inputs.ndim != 2 or len(self.inputs) != len(self.labels):
            raise DataFormatError("inputs must be (n, M) with one label per row")
        if self.inputs.shape[1] != math.prod(self.image_shape):
            raise DataFormatError(f"image shape {self.image_shape} does not match M={self.inputs.shape[1]}")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            raise DataFormatError(f"labels must lie in [0, {self.classes})")
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0 or not np.isfinite(self.inputs).all()):
            raise DataFormatError("inputs must lie in [0, 1]")

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(self.inputs[idx], self.labels[idx], self.image_shape, self.classes)

    def head(self, n: int) -> "LabeledDataset":
        return self.subset(np.arange(min(n, len(self))))

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.inputs, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        return h.hexdigest()

    def manifest(self) -> dict:
        return {
            "count": len(self),
            "image_shape": list(self.image_shape),
            "classes": self.classes,
            "sha256": self.checksum(),
        }


def _read(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _parse_idx(raw: bytes, magic: int, what: str):
    if len(raw) < 8:
        raise DataFormatError(f"{what}: truncated header")
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise DataFormatError(f"{what}: bad magic number {got} (expected {magic})")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataFormatError(f"{what}: truncated header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = math.prod(dims)
    if len(raw) - header < count:
        raise DataFormatError(f"{what}: truncated payload ({len(raw) - header} of {count} bytes)")
    return dims, np.frombuffer(raw, dtype=np.uint8, count=count, offset=header)


def load_idx(images_path, labels_path, classes: int = 10) -> LabeledDataset:
    """Read an IDX image/label file pair (optionally gzipped). Pixel bytes are
    scaled to [0, 1] by dividing by 255."""
    dims, pixels = _parse_idx(_read(images_path), IDX_IMAGES_MAGIC, "image file")
    ldims, labels = _parse_idx(_read(labels_path), IDX_LABELS_MAGIC, "label file")
    if len(dims) != 3:
        raise DataFormatError(f"image file: expected 3 dimensions, got {len(dims)}")
    if dims[0] != ldims[0]:
        raise DataFormatError(f"count mismatch: {dims[0]} images vs {ldims[0]} labels")
    n, rows, cols = dims
    inputs = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    return LabeledDataset(inputs, labels.astype(np.int64), (rows, cols, 1), classes)


def save_idx(ds: LabeledDataset, images_path, labels_path):
    """Write a dataset as an IDX pair (pixels quantised to bytes)."""
    m, n, _ = ds.image_shape
    pixels = np.rint(ds.inputs * 255.0).astype(np.uint8)
    Path(images_path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, len(ds), m, n) + pixels.tobytes())
    Path(labels_path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, len(ds)) + ds.labels.astype(np.uint8).tobytes())


MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def mnist_dir() -> Path | None:
    """Directory holding the MNIST IDX files: ``$MNIST_DIR`` if set, else
    ``~/data/mnist``. Returns ``None`` when neither contains the files."""
    candidates = [os.environ.get("MNIST_DIR"), Path.home() / "data" / "mnist"]
    for c in candidates:
        if c and all(_find(Path(c), f) for pair in MNIST_FILES.values() for f in pair):
            return Path(c)
    return None


def _find(directory: Path, stem: str):
    for name in (stem, stem + ".gz"):
        if (directory / name).exists():
            return directory / name
    return None


def load_mnist(split: str = "train", directory=None) -> LabeledDataset:
    directory = Path(directory) if directory else mnist_dir()
    if directory is None:
        raise FileNotFoundError("MNIST files not found; set MNIST_DIR")
    imgs, lbls = MNIST_FILES[split]
    return load_idx(_find(directory, imgs), _find(directory, lbls))


def _guess_shape(m: int):
    s = math.isqrt(m)
    return (s, s, 1) if s * s == m else (1, m, 1)


def load_csv(path, label_column: int = 0, classes: int | None = None, image_shape=None) -> LabeledDataset:
    """Read a numeric CSV with one sample per row.

    A first row containing any non-numeric cell is treated as a header. If any
    feature value exceeds 1 the whole file is assumed to hold byte
    intensities and is divided by 255.
    """
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        raise DataFormatError(f"{path}: empty file")

    def numeric(row):
        try:
            return [float(c) for c in row]
        except ValueError:
            return None

    if numeric(rows[0]) is None:
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    width = len(rows[0]) if rows else 0
    table = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataFormatError(f"{path}: ragged row {lineno} ({len(row)} cells, expected {width})")
        vals = numeric(row)
        if vals is None:
            raise DataFormatError(f"{path}: non-numeric cell in row {lineno}")
        table.append(vals)
    arr = np.array(table, dtype=np.float64).reshape(len(table), width)
    labels_f = arr[:, label_column]
    inputs = np.delete(arr, label_column, axis=1)
    if np.any(labels_f != np.round(labels_f)) or np.any(labels_f < 0):
        raise DataFormatError(f"{path}: labels must be non-negative integers")
    labels = labels_f.astype(np.int64)
    if classes is None:
        classes = int(labels.max()) + 1 if len(labels) else 1
    if len(labels) and labels.max() >= classes:
        raise DataFormatError(f"{path}: label {labels.max()} out of range for {classes} classes")
    if inputs.size and inputs.max() > 1.0:
        inputs = inputs / 255.0
    if inputs.size and (inputs.min() < 0.0 or inputs.max() > 1.0):
        raise DataFormatError(f"{path}: values outside [0, 1] (or [0, 255])")
    shape = image_shape or _guess_shape(inputs.shape[1])
    return LabeledDataset(inputs, labels, shape, classes)


def save_csv(ds: LabeledDataset, path, label_column: int = 0, header: bool = False):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        if header:
            names = [f"x{i}" for i in range(ds.dim)]
            names.insert(label_column, "label")
            w.writerow(names)
        for x, y in zip(ds.inputs, ds.labels):
            row = [repr(float(v)) for v in x]
            row.insert(label_column, str(int(y)))
            w.writerow(row)


def synth_blobs(classes: int, dims: int, per_class: int, spread: float, rng: SeededRng, image_shape=None) -> LabeledDataset:
    """Gaussian clusters around uniformly drawn centres, clamped to [0,1]^dims.

    Samples are ordered class by class.
    """
    if classes < 2 or dims < 2:
        raise ValueError("synth_blobs needs classes >= 2 and dims >= 2")
    centres = rng.uniform(0.15, 0.85, size=(classes, dims))
    noise = rng.normal(0.0, 1.0, size=(classes, per_class, dims)) * spread
    inputs = np.clip(centres[:, None, :] + noise, 0.0, 1.0).reshape(classes * per_class, dims)
    labels = np.repeat(np.arange(classes), per_class)
    return LabeledDataset(inputs, labels, image_shape or (1, dims, 1), classes)


def take_seed_set(ds: LabeledDataset, rng: SeededRng, n_total: int | None = None, n_per_class: int | None = None):
    """Split off the adversary's initial inputs.

    Returns ``(seeds, eval_set)``: ``seeds`` is an ``(n, M)`` array with the
    labels dropped (the adversary must ask the oracle), ``eval_set`` is the
    labelled remainder, reserved for measuring results.
    """
    if (n_total is None) == (n_per_class is None):
        raise ValueError("give exactly one of n_total or n_per_class")
    order = rng.permutation(len(ds))
    if n_total is not None:
        if n_total > len(ds):
            raise ValueError(f"asked for {n_total} seeds from {len(ds)} samples")
        chosen = order[:n_total]
    else:
        chosen = []
        for c in range(ds.classes):
            of_class = order[ds.labels[order] == c][:n_per_class]
            if len(of_class) < n_per_class:
                raise ValueError(f"class {c} has only {len(of_class)} samples")
            chosen.extend(of_class)
        chosen = np.sort(np.array(chosen))
    mask = np.zeros(len(ds), dtype=bool)
    mask[chosen] = True
    return ds.inputs[chosen].copy(), ds.subset(np.nonzero(~mask)[0])


def split(ds: LabeledDataset, fractions, rng: SeededRng):
    """Disjoint, exhaustive random partition by fractions (which must sum
    to 1). The last part absorbs rounding."""
    fractions = list(fractions)
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be non-negative and sum to 1")
    order = rng.permutation(len(ds))
    cuts = np.floor(np.cumsum(fractions)[:-1] * len(ds)).astype(int)
    return [ds.subset(np.sort(part)) for part in np.split(order, cuts)]


def write_manifest(ds: LabeledDataset, path):
    Path(path).write_text(json.dumps(ds.manifest(), indent=2, sort_keys=True))
