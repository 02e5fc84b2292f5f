import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedsilo.chem.corpus import corpus_by_scaffold_type, molecule_corpus
from fedsilo.chem.featurize import EDGE_DIM, NODE_DIM, NODE_SCHEMA, featurize, node_slice
from fedsilo.chem.scaffold import ACYCLIC, scaffold_key
from fedsilo.chem.smiles import ELEMENTS, SmilesError, parse_smiles


def test_ethanol():
    g = parse_smiles("CCO")
    assert [a.element for a in g.atoms] == ["C", "C", "O"]
    assert [b.order for b in g.bonds] == ["single", "single"]
    assert [a.implicit_h for a in g.atoms] == [3, 2, 1]


def test_benzene():
    g = parse_smiles("c1ccccc1")
    assert g.num_atoms == 6 and all(a.aromatic and a.element == "C" for a in g.atoms)
    assert len(g.bonds) == 6 and all(b.order == "aromatic" and b.in_ring for b in g.bonds)
    assert g.has_ring


def test_acetic_acid_bond_orders():
    g = parse_smiles("CC(=O)O")
    assert g.num_atoms == 4
    orders = {(b.i, b.j): b.order for b in g.bonds}
    assert orders == {(0, 1): "single", (1, 2): "double", (1, 3): "single"}


def test_unclosed_ring_reports_offset():
    with pytest.raises(SmilesError) as err:
        parse_smiles("C1CC")
    assert err.value.offset == 1
    assert "unclosed ring bond 1" in str(err.value)


@pytest.mark.parametrize("bad", ["CC(C", "CC)C", "CXC", "C(=O)(=O)=O", "[Zz]", "", "C%1"])
def test_declared_errors(bad):
    with pytest.raises(SmilesError) as err:
        parse_smiles(bad)
    assert isinstance(err.value.offset, int)


def test_bracket_atoms_and_stereo():
    g = parse_smiles("C[NH3+]")
    assert g.atoms[1].formal_charge == 1 and g.atoms[1].implicit_h == 3
    assert parse_smiles("F/C=C/F").num_atoms == 4
    assert parse_smiles("C[C@@H](O)CC") == parse_smiles("CC(O)CC")
    assert parse_smiles("C%12CCCCC%12").has_ring


def test_valences():
    assert parse_smiles("CS(=O)(=O)C").atoms[1].implicit_h == 0
    assert parse_smiles("P").atoms[0].implicit_h == 3
    assert parse_smiles("ClC(Cl)(Cl)Cl").atoms[1].implicit_h == 0


def test_corpus_parses_totally():
    corpus = molecule_corpus()
    assert len(corpus) >= 500
    dims = {featurize(parse_smiles(s)).feature_dim for s in corpus}
    assert dims == {NODE_DIM}


def test_featurize_methane_and_ethanol():
    f = featurize(parse_smiles("C"))
    assert f.node_features.shape == (1, NODE_DIM)
    assert f.node_features[0, node_slice("degree")].tolist() == [1, 0, 0, 0, 0]
    assert f.node_features[0, node_slice("num_h")].tolist() == [0, 0, 0, 0, 1]
    f = featurize(parse_smiles("CCO"))
    o = f.node_features[2]
    assert o[node_slice("element")].tolist() == [1.0 if e == "O" else 0.0 for e in ELEMENTS]
    assert o[node_slice("degree")].argmax() == 1
    assert o[node_slice("num_h")].argmax() == 1
    assert featurize(parse_smiles("c1ccccc1")).feature_dim == f.feature_dim
    assert f.edge_features.shape == (2, EDGE_DIM)


def test_no_chirality_feature():
    assert all("chiral" not in name for name, _ in NODE_SCHEMA)
    a = featurize(parse_smiles("C[C@H](O)CC")).node_features
    b = featurize(parse_smiles("C[C@@H](O)CC")).node_features
    assert np.array_equal(a, b)


def test_scaffold_examples():
    assert scaffold_key(parse_smiles("CCCO")) == scaffold_key(parse_smiles("CC"))
    k = scaffold_key(parse_smiles("CCCO"))
    assert k.key == ACYCLIC and k.is_acyclic
    # hand pruning removes the methyl side chain
    toluene = scaffold_key(parse_smiles("Cc1ccccc1"))
    assert toluene == scaffold_key(parse_smiles("c1ccccc1")) and not toluene.is_acyclic
    assert scaffold_key(parse_smiles("C1CCCCC1")).key != scaffold_key(parse_smiles("c1ccccc1")).key


def test_scaffold_keeps_ring_linkers():
    biphenyl_ether = scaffold_key(parse_smiles("c1ccccc1Oc1ccccc1"))
    biphenyl = scaffold_key(parse_smiles("c1ccccc1-c1ccccc1"))
    assert biphenyl_ether.key != biphenyl.key
    assert scaffold_key(parse_smiles("CCc1ccccc1OCCOc1ccccc1C")) == scaffold_key(parse_smiles("c1ccccc1OCCOc1ccccc1"))


def test_acyclic_flag_matches_rings():
    acyclic, cyclic = corpus_by_scaffold_type()
    assert all(not parse_smiles(s).has_ring for s in acyclic)
    assert all(parse_smiles(s).has_ring for s in cyclic)


_CORPUS = molecule_corpus()


@given(st.sampled_from(_CORPUS), st.randoms(use_true_random=False))
def test_scaffold_key_is_permutation_invariant(smiles, rnd):
    g = parse_smiles(smiles)
    perm = list(range(g.num_atoms))
    rnd.shuffle(perm)
    assert scaffold_key(g.permuted(perm)) == scaffold_key(g)
