"""SMILES parsing, graph featurisation and scaffold keys."""
from .featurize import EDGE_DIM, NODE_DIM, NODE_SCHEMA, FeaturizedMolecule, featurize
from .scaffold import ACYCLIC, ScaffoldKey, canonical_string, murcko_framework, scaffold_key
from .smiles import Atom, Bond, MolecularGraph, SmilesError, parse_smiles

__all__ = [
    "ACYCLIC",
    "Atom",
    "Bond",
    "EDGE_DIM",
    "FeaturizedMolecule",
    "MolecularGraph",
    "NODE_DIM",
    "NODE_SCHEMA",
    "ScaffoldKey",
    "SmilesError",
    "canonical_string",
    "featurize",
    "murcko_framework",
    "parse_smiles",
    "scaffold_key",
]
