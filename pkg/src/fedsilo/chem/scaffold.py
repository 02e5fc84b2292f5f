"""Murcko-style ring-framework keys with an order-independent string form."""
from __future__ import annotations

from dataclasses import dataclass

from .smiles import Atom, Bond, MolecularGraph

ACYCLIC = "ACYCLIC"
_ORDER_CODE = {"single": 1, "double": 2, "triple": 3, "aromatic": 4}
_ORDER_SYMBOL = {"single": "", "double": "=", "triple": "#", "aromatic": ""}


@dataclass(frozen=True)
class ScaffoldKey:
    key: str
    is_acyclic: bool


def murcko_framework(g: MolecularGraph) -> MolecularGraph:
    """Strip side chains: repeatedly drop non-ring atoms of degree <= 1."""
    in_ring = g.atom_in_ring()
    alive = [True] * g.num_atoms
    nbrs = g.neighbors()
    deg = g.degrees()
    changed = True
    while changed:
        changed = False
        for k in range(g.num_atoms):
            if alive[k] and not in_ring[k] and deg[k] <= 1:
                alive[k] = False
                changed = True
                for j, _ in nbrs[k]:
                    if alive[j]:
                        deg[j] -= 1
    keep = [k for k in range(g.num_atoms) if alive[k]]
    remap = {old: new for new, old in enumerate(keep)}
    atoms = tuple(Atom(g.atoms[k].element, g.atoms[k].aromatic) for k in keep)
    bonds = tuple(Bond(remap[b.i], remap[b.j], b.order, b.in_ring)
                  for b in g.bonds if alive[b.i] and alive[b.j])
    return MolecularGraph(atoms, bonds)


def _dense_ranks(labels: list) -> list[int]:
    order = {lab: r for r, lab in enumerate(sorted(set(labels)))}
    return [order[lab] for lab in labels]


def _refine(ranks: list[int], nbrs: list[list[tuple[int, int]]]) -> list[int]:
    n_classes = len(set(ranks))
    while True:
        labels = [(ranks[i], tuple(sorted((code, ranks[j]) for j, code in nbrs[i])))
                  for i in range(len(ranks))]
        new = _dense_ranks(labels)
        m = len(set(new))
        if m == n_classes:
            return new
        ranks, n_classes = new, m


def _write(g: MolecularGraph, ranks: list[int], nbrs) -> str:
    n = g.num_atoms
    order_of = {}
    for b in g.bonds:
        order_of[(b.i, b.j)] = order_of[(b.j, b.i)] = b.order
    visited = [False] * n
    parent = [-1] * n
    dfs_order: list[int] = []
    children: list[list[int]] = [[] for _ in range(n)]
    closures: list[tuple[int, int]] = []

    def rec(v: int):
        visited[v] = True
        dfs_order.append(v)
        for j in sorted((j for j, _ in nbrs[v]), key=lambda t: ranks[t]):
            if j == parent[v]:
                continue
            if visited[j]:
                if (j, v) not in closures and (v, j) not in closures:
                    closures.append((j, v) if dfs_order.index(j) < dfs_order.index(v) else (v, j))
                continue
            parent[j] = v
            children[v].append(j)
            rec(j)

    pieces = []
    for start in sorted(range(n), key=lambda t: ranks[t]):
        if visited[start]:
            continue
        rec(start)
        pieces.append(start)

    pos = {v: k for k, v in enumerate(dfs_order)}
    ring_at: dict[int, list[tuple[int, int]]] = {v: [] for v in range(n)}
    for a, b in sorted(closures, key=lambda e: (pos[e[0]], pos[e[1]])):
        ring_at[a].append((a, b))
        ring_at[b].append((a, b))

    digit_of: dict[tuple[int, int], int] = {}
    free: list[int] = []
    next_digit = [1]

    def symbol(v: int) -> str:
        at = g.atoms[v]
        return at.element.lower() if at.aromatic else at.element

    def bond_sym(a: int, b: int) -> str:
        o = order_of[(a, b)]
        if o == "single" and g.atoms[a].aromatic and g.atoms[b].aromatic:
            return "-"
        return _ORDER_SYMBOL[o]

    def emit(v: int) -> str:
        out = [symbol(v)]
        for e in sorted(ring_at[v], key=lambda e: (pos[e[1]] if e[0] == v else pos[e[0]])):
            if e[0] == v:
                if free:
                    d = min(free)
                    free.remove(d)
                else:
                    d = next_digit[0]
                    next_digit[0] += 1
                digit_of[e] = d
                out.append(bond_sym(*e) + (str(d) if d < 10 else f"%{d:02d}"))
            else:
                d = digit_of[e]
                free.append(d)
                out.append(str(d) if d < 10 else f"%{d:02d}")
        kids = children[v]
        for k, c in enumerate(kids):
            body = bond_sym(v, c) + emit(c)
            out.append(body if k == len(kids) - 1 else f"({body})")
        return "".join(out)

    return ".".join(emit(s) for s in pieces)


def canonical_string(g: MolecularGraph) -> str:
    """Smallest serialisation over individualisation-refinement branches."""
    if g.num_atoms == 0:
        return ""
    nbrs = [[(j, _ORDER_CODE[b.order]) for j, b in row] for row in g.neighbors()]
    seed = _dense_ranks([(a.element, a.aromatic) for a in g.atoms])
    best: list[str | None] = [None]

    def search(ranks: list[int]):
        ranks = _refine(ranks, nbrs)
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = [r for r, c in counts.items() if c > 1]
        if not tied:
            s = _write(g, ranks, nbrs)
            if best[0] is None or s < best[0]:
                best[0] = s
            return
        cls = min(tied)
        for v in (i for i, r in enumerate(ranks) if r == cls):
            # individualise v: it sorts first inside its class
            search([2 * r + (0 if (r == cls and i == v) else 1) if r == cls else 2 * r
                    for i, r in enumerate(ranks)])

    search(seed)
    return best[0]


def scaffold_key(g: MolecularGraph) -> ScaffoldKey:
    frame = murcko_framework(g)
    if frame.num_atoms == 0:
        return ScaffoldKey(ACYCLIC, True)
    return ScaffoldKey(canonical_string(frame), False)
