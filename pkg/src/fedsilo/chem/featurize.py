"""Fixed atom/bond feature schema for the mixture graph network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .smiles import BOND_ORDERS, ELEMENTS, MolecularGraph

MAX_DEGREE = 4
MAX_HCOUNT = 4

# (name, width) in concatenation order; there is deliberately no chirality block
NODE_SCHEMA: tuple[tuple[str, int], ...] = (
    ("element", len(ELEMENTS)),
    ("degree", MAX_DEGREE + 1),
    ("aromatic", 1),
    ("formal_charge", 1),
    ("num_h", MAX_HCOUNT + 1),
    ("in_ring", 1),
)
EDGE_SCHEMA: tuple[tuple[str, int], ...] = (("order", len(BOND_ORDERS)), ("in_ring", 1))

NODE_DIM = sum(w for _, w in NODE_SCHEMA)
EDGE_DIM = sum(w for _, w in EDGE_SCHEMA)


def node_slice(block: str) -> slice:
    start = 0
    for name, width in NODE_SCHEMA:
        if name == block:
            return slice(start, start + width)
        start += width
    raise KeyError(block)


@dataclass(frozen=True)
class FeaturizedMolecule:
    node_features: np.ndarray  # (num_atoms, NODE_DIM)
    edge_list: np.ndarray  # (num_bonds, 2) int
    edge_features: np.ndarray  # (num_bonds, EDGE_DIM)

    @property
    def num_atoms(self) -> int:
        return self.node_features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.node_features.shape[1]


def featurize(g: MolecularGraph) -> FeaturizedMolecule:
    n = g.num_atoms
    x = np.zeros((n, NODE_DIM))
    deg = g.degrees()
    ring = g.atom_in_ring()
    el, dg, ar = node_slice("element"), node_slice("degree"), node_slice("aromatic")
    ch, nh, rg = node_slice("formal_charge"), node_slice("num_h"), node_slice("in_ring")
    for k, atom in enumerate(g.atoms):
        x[k, el.start + ELEMENTS.index(atom.element)] = 1.0
        x[k, dg.start + min(deg[k], MAX_DEGREE)] = 1.0
        x[k, ar.start] = float(atom.aromatic)
        x[k, ch.start] = float(atom.formal_charge)
        x[k, nh.start + min(atom.implicit_h, MAX_HCOUNT)] = 1.0
        x[k, rg.start] = float(ring[k])

    edges = np.array([(b.i, b.j) for b in g.bonds], dtype=np.int64).reshape(-1, 2)
    e = np.zeros((len(g.bonds), EDGE_DIM))
    for k, b in enumerate(g.bonds):
        e[k, BOND_ORDERS.index(b.order)] = 1.0
        e[k, len(BOND_ORDERS)] = float(b.in_ring)
    for arr in (x, edges, e):
        arr.flags.writeable = False
    return FeaturizedMolecule(x, edges, e)
