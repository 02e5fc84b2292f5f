import dataclasses

import numpy as np
import pytest

from fedsilo import numcore as nc
from fedsilo.chem.featurize import featurize
from fedsilo.chem.smiles import parse_smiles
from fedsilo.models.gnn import GraphBatch, activity_loss_fn, gnn_predict, loss_activity
from fedsilo.models.koopman import (decode, encode, koopman_rollout, koopman_rollout_batch, loss_trajectory,
                                    rollout_latent, trajectory_loss_fn)
from fedsilo.models.spec import GNN_MIXTURE, KOOPMAN_WIENER, ModelSpec, init_model


def mol(s):
    return featurize(parse_smiles(s))


def test_init_is_deterministic_and_seeded():
    a = init_model(ModelSpec(GNN_MIXTURE, seed=7))
    assert a.bitwise_equal(init_model(ModelSpec(GNN_MIXTURE, seed=7)))
    assert not a.bitwise_equal(init_model(ModelSpec(GNN_MIXTURE, seed=8)))
    for name, arr in a.items():
        if name.endswith(".b"):
            assert not arr.any()


def test_glorot_bounds():
    w = init_model(ModelSpec(GNN_MIXTURE, seed=3))
    for name, arr in w.items():
        if arr.ndim == 2 and name.endswith(".w") or "w_" in name:
            s = np.sqrt(6.0 / (arr.shape[0] + arr.shape[1]))
            assert np.abs(arr).max() <= s


@pytest.mark.parametrize("kind", [GNN_MIXTURE, KOOPMAN_WIENER])
def test_segments_partition(kind):
    spec = ModelSpec(kind)
    shared, private = spec.shared_segments(), spec.private_segments()
    names = [n for n, _, _ in spec.layout()]
    assert sorted(shared + private) == sorted(names)
    assert not set(shared) & set(private)


def test_gnn_shapes_match_declared_architecture():
    w = init_model(ModelSpec(GNN_MIXTURE))
    assert w["gnn.conv1.w_nbr"].shape == (64, 64)
    assert w["head.l0.w"].shape == (129, 64)
    assert ModelSpec(GNN_MIXTURE).shared_segments()[0].startswith("gnn.")
    k = init_model(ModelSpec(KOOPMAN_WIENER))
    assert k["lin.A"].shape == (2, 2) and k["lin.B"].shape == (2, 2)
    assert k["enc.l0.w"].shape == (32, 10) and k["dec.l2.w"].shape == (10, 32)


def test_zero_model_predicts_zero():
    w = init_model(ModelSpec(GNN_MIXTURE)).zeros_like()
    assert gnn_predict(w, mol("CCO"), mol("c1ccccc1"), 0.4) == 0.0


def test_solute_solvent_order_matters():
    w = init_model(ModelSpec(GNN_MIXTURE, seed=1))
    assert gnn_predict(w, mol("CCO"), mol("CCCCCC"), 0.5) != gnn_predict(w, mol("CCCCCC"), mol("CCO"), 0.5)


def test_single_atom_molecules():
    w = init_model(ModelSpec(GNN_MIXTURE, seed=2, hidden=4))
    b = GraphBatch.build([mol("C")], [mol("O")], [0.3])
    y = np.array([0.7])
    assert np.isfinite(gnn_predict(w, mol("C"), mol("O"), 0.3))
    _, g = nc.forward_backward(activity_loss_fn, w, b, y)
    fd = nc.finite_difference_gradient(activity_loss_fn, w, b, y)
    assert np.max(np.abs(g.flat() - fd.flat())) / np.max(np.abs(fd.flat())) < 1e-4


def test_gnn_atom_permutation_invariance(rng):
    w = init_model(ModelSpec(GNN_MIXTURE, seed=4))
    for s_u, s_v in [("CC(=O)OCC", "c1ccccc1O"), ("OCCN", "C1CCOC1"), ("Clc1ccncc1", "CCCCO")]:
        gu, gv = parse_smiles(s_u), parse_smiles(s_v)
        ref = gnn_predict(w, featurize(gu), featurize(gv), 0.25)
        for _ in range(5):
            pu = rng.permutation(gu.num_atoms)
            pv = rng.permutation(gv.num_atoms)
            got = gnn_predict(w, featurize(gu.permuted(pu)), featurize(gv.permuted(pv)), 0.25)
            assert abs(got - ref) < 1e-10


def test_loss_activity_examples():
    w = init_model(ModelSpec(GNN_MIXTURE)).zeros_like()
    u, v = mol("CCO"), mol("CCC")
    assert loss_activity(w, [(u, v, 0.1, 1.0), (v, u, 0.2, -1.0)]) == 1.0
    assert loss_activity(w, [(u, v, 0.1, 0.0)]) == 0.0
    assert loss_activity(w, [(u, v, 0.1, 3.0)]) == 9.0
    with pytest.raises(ValueError):
        loss_activity(w, [])


def _koopman(seed=0, hidden=None):
    return init_model(ModelSpec(KOOPMAN_WIENER, seed=seed, hidden=hidden))


def test_identity_dynamics_give_constant_rollout(rng):
    w = _koopman(1).replace(nc.ParameterVector([("lin.A", np.eye(2)), ("lin.B", np.zeros((2, 2)))]))
    x0 = rng.uniform(size=10)
    out = koopman_rollout(w, x0, rng.uniform(size=(25, 2)))
    assert out.shape == (25, 10)
    assert all(np.array_equal(out[0], row) for row in out)


def test_single_step_rollout_is_autoencoder(rng):
    w = _koopman(2)
    x0 = rng.uniform(size=10)
    p = dict(w.items())
    expect = np.asarray(decode(p, encode(p, x0.reshape(-1, 1)))).ravel()
    assert np.array_equal(koopman_rollout(w, x0, rng.uniform(size=(1, 2)))[0], expect)


def test_rollout_codomain(rng):
    out = koopman_rollout(_koopman(3), rng.uniform(size=10), rng.uniform(size=(50, 2)))
    assert np.all((out > 0) & (out < 1))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_rollout_reports_divergence(rng):
    w = _koopman(3).replace(nc.ParameterVector([("lin.A", 1e200 * np.eye(2))]))
    with pytest.raises(nc.NumericError, match="step"):
        koopman_rollout(w, rng.uniform(size=10), rng.uniform(size=(5, 2)))


def test_batch_rollout_matches_single(rng):
    w = _koopman(5)
    x0 = rng.uniform(size=(3, 10))
    u = rng.uniform(size=(3, 12, 2))
    batch = koopman_rollout_batch(w, x0, u)
    for k in range(3):
        assert np.max(np.abs(batch[k] - koopman_rollout(w, x0[k], u[k]))) < 1e-14


def test_fused_loss_matches_stepwise_latent_route(rng):
    w = _koopman(6, hidden=5)
    states = rng.uniform(size=(2, 7, 10))
    inputs = rng.uniform(size=(2, 7, 2))
    fused = nc.evaluate(trajectory_loss_fn, w, states, inputs, 0.0)
    p = dict(w.items())
    zs = rollout_latent(p, states[:, 0, :].T, inputs.transpose(1, 2, 0))
    pred = np.stack([np.asarray(decode(p, z)).T for z in zs], axis=1)
    assert abs(fused - np.mean((pred - states) ** 2)) < 1e-14


class _Traj:
    def __init__(self, states, inputs):
        self.states, self.inputs = states, inputs


def test_loss_trajectory_examples(rng):
    w = _koopman(7)
    u = rng.uniform(size=(20, 2))
    x0 = rng.uniform(size=10)
    # prediction error is measured from dec(enc(x0)) onwards, so it stays positive
    own = koopman_rollout(w, x0, u)
    assert loss_trajectory(w, _Traj(own, u), lambda_rec=0.0) < loss_trajectory(w, _Traj(own[::-1], u), lambda_rec=0.0)
    t = _Traj(rng.uniform(size=(20, 10)), u)
    pure = loss_trajectory(w, t, lambda_rec=0.0)
    assert pure == pytest.approx(np.mean((koopman_rollout(w, t.states[0], u) - t.states) ** 2), abs=1e-15)
    assert loss_trajectory(w, t) > pure > 0


def test_koopman_gradient(rng):
    w = _koopman(8, hidden=4)
    states = rng.uniform(size=(1, 6, 10))
    inputs = rng.uniform(size=(1, 6, 2))
    _, g = nc.forward_backward(trajectory_loss_fn, w, states, inputs, 1.0)
    fd = nc.finite_difference_gradient(trajectory_loss_fn, w, states, inputs, 1.0)
    assert np.max(np.abs(g.flat() - fd.flat())) / np.max(np.abs(fd.flat())) < 1e-4


def test_spec_rejects_unknown_kind():
    with pytest.raises(ValueError):
        ModelSpec("transformer")
    assert dataclasses.replace(ModelSpec(GNN_MIXTURE), seed=3).seed == 3
