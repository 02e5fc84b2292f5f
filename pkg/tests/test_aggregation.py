import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedsilo.fedproto import FEDAVG_FULL, FEDPER_PARTIAL, AggregationError, Update, aggregate
from fedsilo.numcore import ParameterVector
from strategies import update_sets


def pv(**segs):
    return ParameterVector([(k, np.asarray(v, dtype=float)) for k, v in segs.items()])


def test_examples():
    out = aggregate([(pv(w=[1, 3]), 1), (pv(w=[3, 5]), 1)])
    assert out["w"].tolist() == [2.0, 4.0]
    assert aggregate([(pv(w=[0]), 3), (pv(w=[4]), 1)])["w"].tolist() == [1.0]


def test_single_update_returned_unchanged():
    w = pv(a=[0.1, -0.0, np.pi])
    assert aggregate([Update(5, w, 17)]).bitwise_equal(w)


def test_errors():
    with pytest.raises(AggregationError):
        aggregate([])
    with pytest.raises(AggregationError):
        aggregate([(pv(w=[1.0]), 0), (pv(w=[2.0]), 0)])
    with pytest.raises(AggregationError):
        aggregate([(pv(w=[1.0]), 1), (pv(w=[2.0, 3.0]), 1)])
    with pytest.raises(AggregationError):
        aggregate([(pv(w=[1.0]), 1), (pv(v=[2.0]), 1)])
    with pytest.raises(AggregationError):
        aggregate([(pv(w=[1.0]), 1)], mode="median")


def test_fedper_averages_shared_only():
    ups = [Update(1, pv(g=[0.0, 2.0], h=[10.0]), 1), Update(2, pv(g=[2.0, 4.0], h=[-10.0]), 1)]
    out = aggregate(ups, FEDPER_PARTIAL, ["g"])
    assert out.names == ["g"] and out["g"].tolist() == [1.0, 3.0]


def _oracle(ups):
    n = sum(u.n_k for u in ups)
    out = {}
    for name in ups[0].params.names:
        acc = np.zeros_like(ups[0].params[name])
        for u in ups:
            acc = acc + (u.n_k / n) * u.params[name]
        out[name] = acc
    return out


@settings(max_examples=1000)
@given(update_sets())
def test_matches_direct_sum_oracle(ups):
    got = aggregate(ups)
    want = _oracle(ups)
    for name, arr in want.items():
        scale = max(1.0, max(np.abs(u.params[name]).max(initial=0) for u in ups))
        assert np.max(np.abs(got[name] - arr), initial=0) <= 1e-12 * scale


@given(update_sets(), st.randoms())
def test_permutation_invariant_bitwise(ups, rnd):
    shuffled = ups[:]
    rnd.shuffle(shuffled)
    assert aggregate(ups).bitwise_equal(aggregate(shuffled))


@given(update_sets())
def test_identical_uploads_are_a_fixed_point(ups):
    w = ups[0].params
    same = [Update(u.client_id, w, u.n_k) for u in ups]
    assert aggregate(same).bitwise_equal(w)


def test_mode_constants():
    assert FEDAVG_FULL == "fedavg_full" and FEDPER_PARTIAL == "fedper_partial"
