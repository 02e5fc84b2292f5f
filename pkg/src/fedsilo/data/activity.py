"""Activity-coefficient samples: CSV ingestion and a synthetic surrogate."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..chem import FeaturizedMolecule, MolecularGraph, SmilesError, featurize, parse_smiles
from ..chem.corpus import corpus_by_scaffold_type, molecule_corpus

CSV_COLUMNS = ("solute_smiles", "solvent_smiles", "temperature_K", "ln_gamma_inf")
T_RANGE = (280.0, 360.0)
NOISE_SIGMA = 0.05
ACYCLIC_SOLVENT_FRACTION = 0.75


class FormatError(ValueError):
    """The input file does not have the expected shape."""


@dataclass(frozen=True)
class ActivitySample:
    solute_smiles: str
    solvent_smiles: str
    temperature: float
    ln_gamma_inf: float

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")

    def sort_key(self) -> tuple:
        return (self.solute_smiles, self.solvent_smiles, self.temperature, self.ln_gamma_inf)


@dataclass(frozen=True)
class Rejection:
    row: int
    reason: str
    offset: int | None = None


@lru_cache(maxsize=None)
def molecule(smiles: str) -> MolecularGraph:
    return parse_smiles(smiles)


@lru_cache(maxsize=None)
def featurized(smiles: str) -> FeaturizedMolecule:
    return featurize(molecule(smiles))


def ingest_activity_csv(path: str | Path) -> tuple[list[ActivitySample], list[Rejection]]:
    """Read ``solute_smiles, solvent_smiles, temperature_K, ln_gamma_inf`` rows.

    Rows whose SMILES do not parse (or whose numbers are invalid) are skipped
    and reported; ``row`` counts data rows from 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty file")
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise FormatError(f"{path}: missing columns {missing}")
        samples, rejected = [], []
        for row_no, row in enumerate(reader, start=1):
            try:
                for col in ("solute_smiles", "solvent_smiles"):
                    try:
                        molecule(row[col])
                    except SmilesError as exc:
                        raise _RowError(f"{col}: {exc.reason}", exc.offset) from None
                try:
                    t = float(row["temperature_K"])
                    y = float(row["ln_gamma_inf"])
                except (TypeError, ValueError):
                    raise _RowError("non-numeric temperature or label") from None
                if not (np.isfinite(t) and np.isfinite(y)) or t <= 0:
                    raise _RowError("temperature must be positive and values finite")
                samples.append(ActivitySample(row["solute_smiles"], row["solvent_smiles"], t, y))
            except _RowError as exc:
                rejected.append(Rejection(row_no, exc.reason, exc.offset))
    if not samples and not rejected:
        raise FormatError(f"{path}: no data rows")
    return samples, rejected


class _RowError(Exception):
    def __init__(self, reason: str, offset: int | None = None):
        super().__init__(reason)
        self.reason = reason
        self.offset = offset


def write_rejections(rejections: list[Rejection], path: str | Path) -> None:
    """One JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejections:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")


def write_activity_csv(samples: list[ActivitySample], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in samples:
            w.writerow([s.solute_smiles, s.solvent_smiles, repr(s.temperature), repr(s.ln_gamma_inf)])


def _polarity_and_size(smiles: str) -> tuple[float, int]:
    g = molecule(smiles)
    s = g.heavy_atom_count()
    return g.count("O", "N") / s, s


def activity_oracle(solute: str, solvent: str, temperature: float) -> float:
    """Noise-free surrogate label.

    ``1.5 (p_u - p_v)^2 s_u + 0.02 (s_u - s_v)^2 (300 / T)`` with ``p`` the
    (O + N) fraction of heavy atoms and ``s`` the heavy-atom count.
    """
    pu, su = _polarity_and_size(solute)
    pv, sv = _polarity_and_size(solvent)
    return 1.5 * (pu - pv) ** 2 * su + 0.02 * (su - sv) ** 2 * (300.0 / temperature)


def generate_synthetic_activity(seed: int, n_samples: int,
                                acyclic_solvent_fraction: float = ACYCLIC_SOLVENT_FRACTION,
                                noise_sigma: float = NOISE_SIGMA) -> list[ActivitySample]:
    """Random binary mixtures over the built-in corpus with oracle labels plus noise.

    Solvents are drawn from the acyclic half of the corpus with probability
    ``acyclic_solvent_fraction`` so the scaffold scenario stays feasible.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    corpus = molecule_corpus()
    acyclic, cyclic = corpus_by_scaffold_type()
    rng = np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), 0xAC71]))
    out = []
    for _ in range(n_samples):
        solute = corpus[rng.integers(len(corpus))]
        pool = acyclic if rng.random() < acyclic_solvent_fraction else cyclic
        solvent = pool[rng.integers(len(pool))]
        t = float(rng.uniform(*T_RANGE))
        y = activity_oracle(solute, solvent, t) + noise_sigma * float(rng.standard_normal())
        out.append(ActivitySample(solute, solvent, t, y))
    return out
