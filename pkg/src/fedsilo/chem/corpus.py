"""Deterministic corpus of subset SMILES used by the synthetic activity data.

Molecules are assembled from small alkyl fragments and functional groups,
then de-duplicated by canonical graph string. The result is sorted, so the
corpus is identical on every platform.
"""
from __future__ import annotations

from functools import lru_cache

from .scaffold import canonical_string, scaffold_key
from .smiles import parse_smiles

# attachment point is the LAST written atom
_ALKYL_HEAD = ("C", "CC", "CCC", "CC(C)", "CCCC", "CC(C)C", "CCC(C)", "CC(C)(C)",
               "CCCCC", "CCCCCC", "CCCCCCC", "CCCCCCCC")
# attachment point is the FIRST written atom
_ALKYL_TAIL = ("C", "CC", "CCC", "C(C)C", "CCCC", "CC(C)C", "C(C)CC", "CCCCC", "CCCCCC")

_MONO_GROUPS = ("O", "N", "S", "Cl", "Br", "F", "I", "C#N", "C=O", "C(=O)O", "C(=O)N",
                "OC(=O)C", "N(C)C", "C(F)(F)F", "[N+](=O)[O-]")
_LINKERS = ("O", "C(=O)", "C(=O)O", "N", "S", "OCCO", "C(=O)N")

_RING_CORES = ("c1ccccc1", "C1CCCCC1", "C1CCCC1", "C1CC1", "c1ccncc1", "c1ccsc1", "c1ccoc1",
               "C1CCOCC1", "C1CCNCC1", "C1CCOC1", "c1ccc2ccccc2c1", "O=C1CCCCC1",
               "C1CCCCCC1")
_RING_PREFIX = ("", "C", "CC", "CCC", "O", "N", "Cl", "Br", "F", "CO", "CC(=O)", "OC(=O)",
                "N#C", "O=C", "CCCC", "CC(C)")


def _acyclic_candidates() -> list[str]:
    out = ["C" * n for n in range(1, 13)]
    out += list(_ALKYL_HEAD)
    for head in _ALKYL_HEAD:
        out += [head + grp for grp in _MONO_GROUPS]
    for head in _ALKYL_HEAD[:8]:
        for link in _LINKERS:
            out += [head + link + tail for tail in _ALKYL_TAIL[:6]]
    out += ["OCCO", "OCC(O)CO", "NCCO", "NCCN", "OCCOCCO", "CC(O)C(C)O", "ClCCCl",
            "ClC(Cl)Cl", "ClC(Cl)(Cl)Cl", "BrCCBr", "FC(F)(F)C(F)(F)F", "CS(C)=O",
            "CN(C)C=O", "CC#N", "CC(C)=O", "C=CC=C", "C=CC", "CC=CC", "C#CC", "CCOC(=O)C(=O)OCC",
            "CSC", "CCSCC", "OC(=O)CC(=O)O", "CP(C)C", "CCOP(=O)(OCC)OCC", "O=CC=O", "CCN(CC)CC"]
    return out


def _cyclic_candidates() -> list[str]:
    out = []
    for core in _RING_CORES:
        prefixes = ("",) if core.startswith("O=") else _RING_PREFIX
        out += [pre + core for pre in prefixes]
    for a in ("C", "O", "Cl", "N", "CC"):
        for b in ("C", "O", "Cl", "CC"):
            out.append(f"{a}c1ccc({b})cc1")
            out.append(f"{a}c1cccc({b})c1")
    out += ["c1ccc(cc1)c1ccccc1", "c1ccc(cc1)Cc1ccccc1", "c1ccc(cc1)Oc1ccccc1",
            "C1CCC(CC1)C1CCCCC1", "c1ccc2[nH]ccc2c1", "c1cnc2ccccc2c1", "O=C1CCCO1",
            "O=C1CCCN1C", "C1COCCO1", "C1CCSC1", "c1ccc2c(c1)CCCC2", "O=C(c1ccccc1)c1ccccc1"]
    return out


def _unique(smiles: list[str]) -> list[str]:
    seen: dict[str, str] = {}
    for s in smiles:
        g = parse_smiles(s)
        key = canonical_string(g)
        if key not in seen or len(s) < len(seen[key]) or (len(s) == len(seen[key]) and s < seen[key]):
            seen[key] = s
    return sorted(seen.values())


@lru_cache(maxsize=1)
def molecule_corpus() -> tuple[str, ...]:
    return tuple(_unique(_acyclic_candidates() + _cyclic_candidates()))


@lru_cache(maxsize=1)
def corpus_by_scaffold_type() -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(acyclic, cyclic) halves of the corpus."""
    acyclic, cyclic = [], []
    for s in molecule_corpus():
        (acyclic if scaffold_key(parse_smiles(s)).is_acyclic else cyclic).append(s)
    return tuple(acyclic), tuple(cyclic)
