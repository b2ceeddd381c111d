"""Architecture registry (ids A through M) plus helpers for custom and
reduced-width variants."""

from __future__ import annotations

from dataclasses import dataclass, field

from .layers import ConvMax, Dense, ReLU, Sigmoid, Softmax, layer_from_dict, layer_to_dict

IMAGE_SHAPES = {784: (28, 28, 1), 3072: (32, 32, 3)}


@dataclass(frozen=True)
class ArchitectureSpec:
    id: str
    in_dim: int
    out_dim: int
    layers: tuple
    image_shape: tuple | None = field(default=None)

    def __post_init__(self):
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise ValueError("the final layer of a classifier must be Softmax")
        if self.layers[-1].units != self.out_dim:
            raise ValueError("Softmax width must equal out_dim")
        if any(isinstance(l, ConvMax) for l in self.layers):
            shape = self.image_shape or IMAGE_SHAPES.get(self.in_dim)
            if shape is None or shape[0] * shape[1] * shape[2] != self.in_dim:
                raise ValueError(f"{self.id}: convolutional layers need an image shape for in_dim={self.in_dim}")
            object.__setattr__(self, "image_shape", tuple(shape))
        seen_dense = False
        for layer in self.layers:
            if isinstance(layer, (Dense, Softmax)):
                seen_dense = True
            elif isinstance(layer, ConvMax) and seen_dense:
                raise ValueError("ConvMax layers must precede dense layers")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "image_shape": list(self.image_shape) if self.image_shape else None,
            "layers": [layer_to_dict(l) for l in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureSpec":
        return cls(
            id=d["id"],
            in_dim=d["in_dim"],
            out_dim=d["out_dim"],
            layers=tuple(layer_from_dict(l) for l in d["layers"]),
            image_shape=tuple(d["image_shape"]) if d.get("image_shape") else None,
        )


# One row per architecture: (id, in, out, columns...). "CMk" is a ConvMax layer
# with k filters, "RLk" a rectified dense layer, "k s" a sigmoid dense layer.
_TABLE = [
    ("A", 784, 10, ["CM32", "CM64", "RL200", "RL200"]),
    ("B", 3072, 43, ["CM64", "CM128", "RL256", "RL256"]),
    ("C", 3072, 43, ["CM32", "CM64", "RL200", "RL200"]),
    ("D", 3072, 43, ["CM32", "CM64", "RL200", "RL200"]),
    ("E", 3072, 43, ["CM64", "CM64", "RL200", "RL200", "RL100"]),
    ("F", 784, 10, ["CM32", "CM64", "RL200"]),
    ("G", 784, 10, ["CM32", "CM64"]),
    ("H", 784, 10, ["CM32", "RL200", "RL200"]),
    ("I", 784, 10, ["RL200", "RL200", "RL200"]),
    ("J", 784, 10, ["RL1000", "RL200"]),
    ("K", 784, 10, ["RL1000", "RL500", "RL200"]),
    ("L", 784, 10, ["CM32", "RL1000", "RL200"]),
    ("M", 784, 10, ["CM32", "SG200", "SG200"]),
]


def _expand(tokens, out_dim, width=1.0):
    def scale(n):
        return max(1, int(round(n * width)))

    layers = []
    for tok in tokens:
        kind, n = tok[:2], int(tok[2:])
        if kind == "CM":
            layers.append(ConvMax(scale(n)))
        elif kind == "RL":
            layers += [Dense(scale(n)), ReLU()]
        elif kind == "SG":
            layers += [Dense(scale(n)), Sigmoid()]
        else:  # pragma: no cover - table is static
            raise ValueError(tok)
    layers.append(Softmax(out_dim))
    return tuple(layers)


ARCHITECTURES = {
    aid: ArchitectureSpec(aid, i, o, _expand(toks, o)) for aid, i, o, toks in _TABLE
}


def get_architecture(aid: str, width: float = 1.0) -> ArchitectureSpec:
    """Look up a registry architecture, optionally with every hidden layer
    scaled by ``width`` (e.g. ``width=0.25`` keeps a quarter of the filters
    and units). Scaled variants get ids like ``"A@0.25"``."""
    base = aid.split("@")[0]
    if "@" in aid:
        width = float(aid.split("@")[1])
    row = next((r for r in _TABLE if r[0] == base), None)
    if row is None:
        raise KeyError(f"unknown architecture id {aid!r}")
    if width == 1.0:
        return ARCHITECTURES[base]
    _, i, o, toks = row
    return ArchitectureSpec(f"{base}@{width:g}", i, o, _expand(toks, o, width))


def mlp(in_dim: int, out_dim: int, hidden=(200, 200), activation="relu", id=None) -> ArchitectureSpec:
    act = ReLU if activation == "relu" else Sigmoid
    layers = []
    for h in hidden:
        layers += [Dense(h), act()]
    layers.append(Softmax(out_dim))
    name = id or "mlp-" + "-".join(str(h) for h in hidden)
    return ArchitectureSpec(name, in_dim, out_dim, tuple(layers))
