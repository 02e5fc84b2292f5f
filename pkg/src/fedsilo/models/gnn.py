"""Mixture graph network: shared message passing, sum readout, MLP head.

Per layer ``h' = tanh(h W_self + (sum over neighbours h) W_nbr + b)``; the
molecule fingerprint is the sum of final node embeddings. The mixture
fingerprint is ``[fp_solute, fp_solvent, T_scaled]`` (ordered), mapped to
``ln gamma_inf`` by a two-hidden-layer tanh MLP with a linear output.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import numcore as nc
from ..chem.featurize import FeaturizedMolecule
from ..numcore import ParameterVector


def _csr_from_pairs(rows: np.ndarray, cols: np.ndarray, shape: tuple[int, int]) -> sp.csr_matrix:
    """0/1 CSR matrix with ones at ``(rows[i], cols[i])``; pairs must be unique."""
    order = np.lexsort((cols, rows))
    indptr = np.zeros(shape[0] + 1, dtype=np.int32)
    np.cumsum(np.bincount(rows, minlength=shape[0]), out=indptr[1:])
    return sp.csr_matrix((np.ones(rows.size), cols[order].astype(np.int32), indptr), shape=shape)


@dataclass
class GraphBatch:
    """Several mixtures packed into one disjoint graph.

    Each distinct molecule appears once; solute/solvent selectors gather the
    fingerprints back per mixture.
    """

    node_features: np.ndarray  # (N, F)
    adjacency: sp.csr_matrix  # (N, N), symmetric 0/1
    atoms_per_molecule: np.ndarray  # (M,), node blocks are contiguous
    solute_index: np.ndarray  # (B,) molecule slot of each solute
    solvent_index: np.ndarray  # (B,)
    temperature: np.ndarray  # (B, 1)

    @property
    def size(self) -> int:
        return self.temperature.shape[0]

    @classmethod
    def build(cls, solutes: Sequence[FeaturizedMolecule], solvents: Sequence[FeaturizedMolecule],
              temperatures_scaled: Sequence[float]) -> GraphBatch:
        if not (len(solutes) == len(solvents) == len(temperatures_scaled)):
            raise nc.StructureError("GraphBatch: solute/solvent/temperature lengths differ")
        mols: list[FeaturizedMolecule] = []
        slot: dict[int, int] = {}

        def index_of(m: FeaturizedMolecule) -> int:
            key = id(m)
            if key not in slot:
                slot[key] = len(mols)
                mols.append(m)
            return slot[key]

        iu = [index_of(m) for m in solutes]
        iv = [index_of(m) for m in solvents]
        sizes = np.array([m.num_atoms for m in mols])
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        n = int(offsets[-1])
        x = np.concatenate([m.node_features for m in mols], axis=0)
        src = np.concatenate([m.edge_list[:, 0] + o for m, o in zip(mols, offsets)] + [np.zeros(0, int)])
        dst = np.concatenate([m.edge_list[:, 1] + o for m, o in zip(mols, offsets)] + [np.zeros(0, int)])
        adj = _csr_from_pairs(np.concatenate([src, dst]), np.concatenate([dst, src]), (n, n))
        b = len(iu)
        t = np.asarray(temperatures_scaled, dtype=np.float64).reshape(b, 1)
        return cls(x, adj, sizes.astype(np.intp), np.asarray(iu, dtype=np.intp),
                   np.asarray(iv, dtype=np.intp), t)


def _mlp_head(p: Mapping, h, n_hidden: int):
    for k in range(n_hidden):
        h = nc.tanh(nc.add(nc.matmul(h, p[f"head.l{k}.w"]), p[f"head.l{k}.b"]))
    return nc.add(nc.matmul(h, p["head.out.w"]), p["head.out.b"])


def _n_layers(p: Mapping, prefix: str) -> int:
    k = 0
    while f"{prefix}{k}.b" in p:
        k += 1
    return k


def gnn_forward(p: Mapping, batch: GraphBatch):
    """Predictions ``(B, 1)``; ``p`` maps segment names to arrays or tape vars."""
    h = batch.node_features
    for k in range(_n_layers(p, "gnn.conv")):
        msg = nc.sparse_matmul(batch.adjacency, h)
        z = nc.add(nc.add(nc.matmul(h, p[f"gnn.conv{k}.w_self"]), nc.matmul(msg, p[f"gnn.conv{k}.w_nbr"])),
                   p[f"gnn.conv{k}.b"])
        h = nc.tanh(z)
    fp = nc.segment_sum(h, batch.atoms_per_molecule)
    mix = nc.concat([nc.take_rows(fp, batch.solute_index),
                     nc.take_rows(fp, batch.solvent_index),
                     batch.temperature], axis=1)
    return _mlp_head(p, mix, _n_layers(p, "head.l"))


def _check(params: ParameterVector) -> None:
    if "head.out.w" not in params or "gnn.conv0.w_self" not in params:
        raise nc.StructureError(f"parameters are not a mixture GNN: {params.names}")


def gnn_predict(params: ParameterVector, solute: FeaturizedMolecule, solvent: FeaturizedMolecule,
                temperature_scaled: float) -> float:
    _check(params)
    batch = GraphBatch.build([solute], [solvent], [temperature_scaled])
    return float(np.asarray(gnn_forward(dict(params.items()), batch)).reshape(()))


def gnn_predict_batch(params: ParameterVector, batch: GraphBatch) -> np.ndarray:
    _check(params)
    return np.asarray(gnn_forward(dict(params.items()), batch)).ravel()


def activity_loss_fn(p: Mapping, batch: GraphBatch, labels: np.ndarray):
    """Tape-level MSE, suitable for :func:`numcore.forward_backward`."""
    return nc.mse(gnn_forward(p, batch), np.asarray(labels, dtype=np.float64).reshape(-1, 1))


def loss_activity(params: ParameterVector, samples: Sequence[tuple]) -> float:
    """Batch MSE for ``(solute, solvent, T_scaled, ln_gamma)`` tuples."""
    if not samples:
        raise ValueError("empty batch")
    _check(params)
    su, sv, t, y = zip(*samples)
    batch = GraphBatch.build(su, sv, t)
    return float(nc.mse(gnn_forward(dict(params.items()), batch), np.asarray(y).reshape(-1, 1)))
