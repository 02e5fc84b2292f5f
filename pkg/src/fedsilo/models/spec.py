from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chem.featurize import NODE_DIM
from ..numcore import ParameterVector

GNN_MIXTURE = "gnn_mixture"
KOOPMAN_WIENER = "koopman_wiener"
STATE_DIM = 10
INPUT_DIM = 2


@dataclass(frozen=True)
class ModelSpec:
    """Architecture and init seed. Width overrides exist for cheap gradient checks."""

    kind: str
    seed: int = 0
    hidden: int | None = None
    latent: int = 2
    message_layers: int = 2
    head_layers: int = 2

    def __post_init__(self):
        if self.kind not in (GNN_MIXTURE, KOOPMAN_WIENER):
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def width(self) -> int:
        if self.hidden is not None:
            return self.hidden
        return 64 if self.kind == GNN_MIXTURE else 32

    def layout(self) -> list[tuple[str, tuple[int, ...], str]]:
        """(segment name, shape, init) in canonical order."""
        h = self.width
        out: list[tuple[str, tuple[int, ...], str]] = []
        if self.kind == GNN_MIXTURE:
            d = NODE_DIM
            for k in range(self.message_layers):
                out += [(f"gnn.conv{k}.w_self", (d, h), "glorot"),
                        (f"gnn.conv{k}.w_nbr", (d, h), "glorot"),
                        (f"gnn.conv{k}.b", (h,), "zeros")]
                d = h
            d = 2 * h + 1
            for k in range(self.head_layers):
                out += [(f"head.l{k}.w", (d, h), "glorot"), (f"head.l{k}.b", (h,), "zeros")]
                d = h
            out += [("head.out.w", (d, 1), "glorot"), ("head.out.b", (1,), "zeros")]
        else:
            # column convention: weights (out, in), biases (out, 1)
            dims = [STATE_DIM, h, h, self.latent]
            for k in range(3):
                out += [(f"enc.l{k}.w", (dims[k + 1], dims[k]), "glorot"),
                        (f"enc.l{k}.b", (dims[k + 1], 1), "zeros")]
            out += [("lin.A", (self.latent, self.latent), "scaled_identity"),
                    ("lin.B", (self.latent, INPUT_DIM), "glorot")]
            dims = [self.latent, h, h, STATE_DIM]
            for k in range(3):
                out += [(f"dec.l{k}.w", (dims[k + 1], dims[k]), "glorot"),
                        (f"dec.l{k}.b", (dims[k + 1], 1), "zeros")]
        return out

    def shared_segments(self) -> list[str]:
        """Segments exchanged under partial sharing (message layers for the GNN)."""
        prefix = "gnn." if self.kind == GNN_MIXTURE else ""
        return [n for n, _, _ in self.layout() if n.startswith(prefix)]

    def private_segments(self) -> list[str]:
        shared = set(self.shared_segments())
        return [n for n, _, _ in self.layout() if n not in shared]


def init_model(spec: ModelSpec) -> ParameterVector:
    """Glorot-uniform weights from a Philox stream per segment; zero biases."""
    segs = []
    for idx, (name, shape, how) in enumerate(spec.layout()):
        if how == "zeros":
            segs.append((name, np.zeros(shape)))
        elif how == "scaled_identity":
            segs.append((name, 0.9 * np.eye(shape[0])))
        else:
            fan_in, fan_out = shape[0], shape[1]
            s = np.sqrt(6.0 / (fan_in + fan_out))
            rng = np.random.Generator(np.random.Philox(key=[int(spec.seed) & (2**64 - 1), idx]))
            segs.append((name, rng.uniform(-s, s, size=shape)))
    return ParameterVector(segs)
