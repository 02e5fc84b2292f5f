"""Parser for an organic SMILES subset.

Handles organic-subset atoms (aromatic in lowercase), ``- = # :`` bonds,
branches, ring closures (``1``-``9`` and ``%nn``), bracket atoms with
explicit hydrogens and charge, and ``.`` separated fragments. Stereo marks
(``@``, ``/``, ``\\``) are accepted and dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

ELEMENTS = ("C", "N", "O", "S", "F", "Cl", "Br", "I", "P")
BOND_ORDERS = ("single", "double", "triple", "aromatic")

_VALENCES = {
    "C": (4,), "N": (3,), "O": (2,), "S": (2, 4, 6), "P": (3, 5),
    "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,),
}
_AROMATIC_OK = {"c", "n", "o", "s", "p"}
_BOND_SYMBOLS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic"}
_BOND_VALENCE = {"single": 1, "double": 2, "triple": 3, "aromatic": 1}


class SmilesError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.reason = message
        self.offset = offset


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    formal_charge: int = 0
    implicit_h: int = 0


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: str
    in_ring: bool = False


@dataclass(frozen=True)
class MolecularGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    smiles: str = field(default="", compare=False)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self) -> list[list[tuple[int, Bond]]]:
        nbrs: list[list[tuple[int, Bond]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            nbrs[b.i].append((b.j, b))
            nbrs[b.j].append((b.i, b))
        return nbrs

    def degrees(self) -> list[int]:
        deg = [0] * len(self.atoms)
        for b in self.bonds:
            deg[b.i] += 1
            deg[b.j] += 1
        return deg

    def atom_in_ring(self) -> list[bool]:
        flags = [False] * len(self.atoms)
        for b in self.bonds:
            if b.in_ring:
                flags[b.i] = flags[b.j] = True
        return flags

    @property
    def has_ring(self) -> bool:
        return any(b.in_ring for b in self.bonds)

    def permuted(self, perm) -> MolecularGraph:
        """Relabel atoms so that old atom ``k`` becomes ``perm[k]``."""
        perm = list(perm)
        if sorted(perm) != list(range(len(self.atoms))):
            raise ValueError("not a permutation of atom indices")
        atoms = [None] * len(self.atoms)
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [Bond(perm[b.i], perm[b.j], b.order, b.in_ring) for b in self.bonds]
        return MolecularGraph(tuple(atoms), tuple(bonds), self.smiles)

    def heavy_atom_count(self) -> int:
        return len(self.atoms)

    def count(self, *elements: str) -> int:
        return sum(a.element in elements for a in self.atoms)


def _ring_flags(n_atoms: int, bonds: list[tuple[int, int]]) -> list[bool]:
    g = nx.Graph()
    g.add_nodes_from(range(n_atoms))
    g.add_edges_from(bonds)
    bridges = {frozenset(e) for e in nx.bridges(g)}
    return [frozenset(e) not in bridges for e in bonds]


class _Parser:
    def __init__(self, s: str):
        self.s = s
        self.pos = 0
        self.atoms: list[dict] = []
        self.bonds: list[list] = []  # [i, j, order|None, explicit]
        self.bond_index: dict[frozenset, int] = {}

    def error(self, msg: str, offset: int | None = None):
        raise SmilesError(msg, self.pos if offset is None else offset)

    def parse(self) -> MolecularGraph:
        s = self.s
        if not s:
            self.error("empty SMILES", 0)
        prev: int | None = None
        pending_bond: str | None = None
        pending_bond_at = 0
        branch_stack: list[tuple[int | None, int]] = []
        rings: dict[int, tuple[int, str | None, int]] = {}

        while self.pos < len(s):
            ch = s[self.pos]
            start = self.pos
            if ch == "(":
                if prev is None or pending_bond is not None:
                    self.error("branch without preceding atom")
                branch_stack.append((prev, start))
                self.pos += 1
            elif ch == ")":
                if not branch_stack:
                    self.error("unbalanced parenthesis ')'")
                if pending_bond is not None:
                    self.error("bond symbol before ')'")
                prev, _ = branch_stack.pop()
                self.pos += 1
            elif ch in _BOND_SYMBOLS:
                if pending_bond is not None:
                    self.error("two consecutive bond symbols")
                pending_bond, pending_bond_at = _BOND_SYMBOLS[ch], start
                self.pos += 1
            elif ch in "/\\":
                if pending_bond is not None:
                    self.error("two consecutive bond symbols")
                pending_bond, pending_bond_at = "single", start
                self.pos += 1
            elif ch == ".":
                if pending_bond is not None or prev is None:
                    self.error("misplaced '.'")
                prev = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error("ring closure without preceding atom")
                if ch == "%":
                    digits = s[self.pos + 1:self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        self.error("malformed %nn ring closure")
                    num = int(digits)
                    self.pos += 3
                else:
                    num = int(ch)
                    self.pos += 1
                if num in rings:
                    other, order, _ = rings.pop(num)
                    if order and pending_bond and order != pending_bond:
                        self.error(f"conflicting bond orders on ring closure {num}", start)
                    if other == prev:
                        self.error(f"ring closure {num} bonds atom to itself", start)
                    self._add_bond(other, prev, pending_bond or order, start)
                else:
                    rings[num] = (prev, pending_bond, start)
                pending_bond = None
            elif ch == "[":
                idx = self._bracket_atom()
                prev = self._attach(prev, idx, pending_bond, pending_bond_at)
                pending_bond = None
            else:
                idx = self._organic_atom()
                prev = self._attach(prev, idx, pending_bond, pending_bond_at)
                pending_bond = None

        if pending_bond is not None:
            self.error("dangling bond symbol", pending_bond_at)
        if rings:
            num, (_, _, off) = min(rings.items(), key=lambda kv: kv[1][2])
            self.error(f"unclosed ring bond {num}", off)
        if branch_stack:
            self.error("unbalanced parenthesis '('", branch_stack[-1][1])
        return self._finish()

    def _attach(self, prev, idx, bond, bond_at):
        if prev is not None:
            self._add_bond(prev, idx, bond, bond_at)
        elif bond is not None:
            self.error("bond symbol without preceding atom", bond_at)
        return idx

    def _add_bond(self, i: int, j: int, order: str | None, offset: int):
        key = frozenset((i, j))
        if key in self.bond_index:
            self.error("duplicate bond", offset)
        self.bond_index[key] = len(self.bonds)
        self.bonds.append([i, j, order, offset])

    def _organic_atom(self) -> int:
        s, start = self.s, self.pos
        two = s[start:start + 2]
        if two in ("Cl", "Br"):
            sym, aromatic = two, False
            self.pos += 2
        else:
            ch = s[start]
            if ch in ("C", "N", "O", "S", "F", "I", "P"):
                sym, aromatic = ch, False
            elif ch in _AROMATIC_OK:
                sym, aromatic = ch.upper(), True
            elif ch.isalpha():
                self.error(f"unknown element {ch!r}")
            else:
                self.error(f"unexpected character {ch!r}")
            self.pos += 1
        self.atoms.append(dict(element=sym, aromatic=aromatic, charge=0, hcount=None, offset=start))
        return len(self.atoms) - 1

    def _bracket_atom(self) -> int:
        s, start = self.s, self.pos
        end = s.find("]", start)
        if end < 0:
            self.error("unclosed bracket atom")
        body = s[start + 1:end]
        p = 0
        if p < len(body) and body[p].isdigit():
            self.error("isotopes are not supported", start + 1)
        if body[p:p + 1].isupper() and body[p + 1:p + 2].islower():
            if body[p:p + 2] not in ("Cl", "Br"):
                self.error(f"unknown element {body[p:p + 2]!r}", start + 1 + p)
            sym, aromatic = body[p:p + 2], False
            p += 2
        elif body[p:p + 1] in ("C", "N", "O", "S", "F", "I", "P"):
            sym, aromatic = body[p], False
            p += 1
        elif body[p:p + 1] in _AROMATIC_OK:
            sym, aromatic = body[p].upper(), True
            p += 1
        else:
            j = p + 1
            while j < len(body) and body[j].islower():
                j += 1
            self.error(f"unknown element {body[p:j]!r}", start + 1 + p)
        while p < len(body) and body[p] == "@":
            p += 1
        h = 0
        if p < len(body) and body[p] == "H":
            p += 1
            h = 1
            if p < len(body) and body[p].isdigit():
                h = int(body[p])
                p += 1
        charge = 0
        if p < len(body) and body[p] in "+-":
            sign = 1 if body[p] == "+" else -1
            q = p + 1
            if q < len(body) and body[q].isdigit():
                charge = sign * int(body[q])
                p = q + 1
            else:
                n = 1
                while q < len(body) and body[q] == body[p]:
                    n += 1
                    q += 1
                charge = sign * n
                p = q
        if p != len(body):
            self.error(f"unsupported bracket atom content {body[p:]!r}", start + 1 + p)
        self.pos = end + 1
        self.atoms.append(dict(element=sym, aromatic=aromatic, charge=charge, hcount=h, offset=start))
        return len(self.atoms) - 1

    def _finish(self) -> MolecularGraph:
        atoms = self.atoms
        orders = []
        for i, j, order, _ in self.bonds:
            if order is None:
                order = "aromatic" if atoms[i]["aromatic"] and atoms[j]["aromatic"] else "single"
            orders.append(order)
        pairs = [(b[0], b[1]) for b in self.bonds]
        ring = _ring_flags(len(atoms), pairs)
        for k, (i, j, order, off) in enumerate(self.bonds):
            # implicit aromatic bond between two aromatic atoms outside a ring (biaryl link)
            if order is None and orders[k] == "aromatic" and not ring[k]:
                orders[k] = "single"
            if orders[k] == "aromatic" and not ring[k]:
                self.error("aromatic bond outside a ring", off)

        used = [0] * len(atoms)
        has_arom = [False] * len(atoms)
        for (i, j), order in zip(pairs, orders):
            used[i] += _BOND_VALENCE[order]
            used[j] += _BOND_VALENCE[order]
            if order == "aromatic":
                has_arom[i] = has_arom[j] = True

        out_atoms = []
        for k, a in enumerate(atoms):
            if a["aromatic"] and not has_arom[k]:
                self.error("aromatic atom outside an aromatic ring", a["offset"])
            if a["hcount"] is not None:
                hcount = a["hcount"]
            else:
                need = used[k]
                if a["aromatic"] and a["element"] in ("C", "N", "P"):
                    need += 1
                allowed = [v for v in _VALENCES[a["element"]] if v >= need]
                if not allowed:
                    self.error(f"valence violation on {a['element']}", a["offset"])
                hcount = allowed[0] - need
            out_atoms.append(Atom(a["element"], a["aromatic"], a["charge"], hcount))
        bonds = tuple(Bond(i, j, o, r) for (i, j), o, r in zip(pairs, orders, ring))
        return MolecularGraph(tuple(out_atoms), bonds, self.s)


def parse_smiles(s: str) -> MolecularGraph:
    """Parse ``s`` into a :class:`MolecularGraph`; raises :class:`SmilesError`."""
    return _Parser(s).parse()
