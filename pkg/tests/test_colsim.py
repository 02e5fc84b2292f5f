import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedsilo import colsim
from fedsilo.colsim import (AdmissibilityError, ColumnInputs, ColumnParams, IntegrationError, Trajectory,
                            column_derivatives, generate_client_dataset, generate_input_signal,
                            simulate_batch, simulate_trajectory, steady_state)

# independent oracle: the CMO balance equations evaluated in mpmath at 40 digits
ORACLE_UNIFORM = [0.10087912087912087912] + [0.0] * 8 + [-0.10087912087912087912]
ORACLE_RAMP = [-0.0097116843702579666161, 0.06659052791310598195, 0.045822545591987149202,
               0.018774916442545823547, -0.51736784954176258524, 0.13280165379175280165,
               0.061373236473789021962, -0.046242425379434553402, -0.2194564787208780771,
               -0.020517928286852589641]


def test_derivatives_match_oracle():
    got = column_derivatives(ColumnParams(V=1.8), np.full(10, 0.5), (0.5, 1.0))
    assert np.max(np.abs(got - ORACLE_UNIFORM)) < 1e-14
    assert got[0] > 0
    got = column_derivatives(ColumnParams(V=1.6), 1 - np.arange(10) / 10, (0.35, 0.9))
    assert np.max(np.abs(got - ORACLE_RAMP)) < 1e-14


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_pure_component_fixed_points(value):
    d = column_derivatives(ColumnParams(V=1.8), np.full(10, value), (value, 1.0))
    assert np.array_equal(d, np.zeros(10))


@pytest.mark.parametrize("L", [0.8, 1.8, 2.5, -0.1])
def test_inadmissible_reflux(L):
    with pytest.raises(AdmissibilityError):
        column_derivatives(ColumnParams(V=1.8), np.full(10, 0.5), (0.5, L))


def test_params_validation():
    with pytest.raises(ValueError):
        ColumnParams(V=0.0)
    with pytest.raises(ValueError):
        ColumnParams(V=1.8, n_stages=12)
    for v in colsim.V_VALUES:
        lo, hi = ColumnParams(V=v).L_bounds
        assert hi - v == 0 and lo < ColumnParams(V=v).nominal_L < hi
        # distillate and bottoms stay positive at the nominal reflux
        assert v - ColumnParams(V=v).nominal_L > 0 and ColumnParams(V=v).nominal_L + 1.0 - v > 0


def test_zero_duration_returns_initial_state():
    x0 = np.linspace(0.9, 0.1, 10)
    t = simulate_trajectory(ColumnParams(V=1.8), x0, ColumnInputs.constant(0.5, 1.2), 0.0)
    assert t.p == 1 and np.array_equal(t.states[0], x0)


def test_bad_initial_state_and_duration():
    p = ColumnParams(V=1.8)
    with pytest.raises(ValueError):
        simulate_trajectory(p, np.full(10, 1.5), ColumnInputs.constant(0.5, 1.2), 60.0)
    with pytest.raises(ValueError):
        simulate_trajectory(p, np.full(10, 0.5), ColumnInputs.constant(0.5, 1.2), -1.0)


def test_integration_error_on_unphysical_parameters():
    p = ColumnParams(V=1.8, holdups=(0.01,) * 10)
    with pytest.raises(IntegrationError):
        simulate_trajectory(p, np.full(10, 0.5), ColumnInputs.constant(0.5, 1.2), 600.0)


def test_twenty_hours_reach_steady_state():
    p = ColumnParams(V=1.8)
    t = simulate_trajectory(p, np.full(10, 0.5), ColumnInputs.constant(0.5, 1.2), 20 * 3600.0)
    assert np.max(np.abs(column_derivatives(p, t.states[-1], (0.5, 1.2)))) < 1e-8


@pytest.mark.parametrize("V", colsim.V_VALUES)
def test_steady_state_is_monotone(V):
    x = steady_state(ColumnParams(V=V))
    assert np.all(np.diff(x) <= 0)
    assert np.max(np.abs(column_derivatives(ColumnParams(V=V), x, (0.5, ColumnParams(V=V).nominal_L)))) < 1e-8


def test_five_hour_test_trajectory_has_300_samples():
    t = colsim.generate_test_trajectory(1.9, 0)
    assert t.p == 300
    assert np.all(np.diff(t.times) == 60.0)


def test_mole_fractions_stay_bounded_over_100_runs():
    for v in (1.6, 2.0):
        p = ColumnParams(V=v)
        sigs = [generate_input_signal(1000 + k, colsim.TRAIN_DURATION, v) for k in range(50)]
        x0 = np.random.default_rng(v.hex().__hash__() % 2**32).uniform(size=(50, 10))
        for t in simulate_batch(p, x0, sigs, colsim.TRAIN_DURATION):
            assert np.all((t.states >= 0) & (t.states <= 1))


def test_step_halving_convergence():
    p = ColumnParams(V=1.7)
    sig = generate_input_signal(3, colsim.TRAIN_DURATION, 1.7)
    x0 = steady_state(p)
    a = simulate_trajectory(p, x0, sig, colsim.TRAIN_DURATION)
    b = simulate_trajectory(p, x0, sig, colsim.TRAIN_DURATION, internal_dt=colsim.INTERNAL_DT / 2)
    assert np.max(np.abs(a.states - b.states)) < 1e-7


def test_input_signal():
    a = generate_input_signal(11, 5 * 3600.0, 1.8)
    b = generate_input_signal(11, 5 * 3600.0, 1.8)
    assert np.array_equal(a.xF, b.xF) and np.array_equal(a.L, b.L)
    assert a.n_segments == 10
    assert np.array_equal(a.switch_times, np.arange(10) * 1800.0)
    assert np.all((a.xF >= 0.3) & (a.xF <= 0.7))
    lo, hi = ColumnParams(V=1.8).L_bounds
    assert np.all((a.L >= lo + 0.1 * (hi - lo)) & (a.L <= hi - 0.1 * (hi - lo)))
    assert not np.array_equal(a.L, generate_input_signal(12, 5 * 3600.0, 1.8).L)
    with pytest.raises(ValueError):
        generate_input_signal(1, 0.0, 1.8)


@given(st.integers(0, 2**40), st.sampled_from(colsim.V_VALUES), st.floats(60.0, 20 * 3600.0))
def test_signals_always_admissible(seed, V, duration):
    sig = generate_input_signal(seed, duration, V)
    ColumnParams(V=V).check_admissible(sig.L)
    assert sig.n_segments == int(np.ceil(duration / 1800.0 - 1e-9))


def test_client_dataset_shapes(small_column):
    train, _ = small_column
    assert [len(train[v]) for v in colsim.V_VALUES] == [3, 3, 3, 2, 3]
    for v, trajs in train.items():
        x0 = steady_state(ColumnParams(V=v))
        for t in trajs:
            assert t.states.shape == (60, 10) and t.inputs.shape == (60, 2)
            assert np.allclose(t.states[0], x0, atol=1e-12)
        assert not np.array_equal(trajs[0].inputs, trajs[1].inputs)
    with pytest.raises(ValueError):
        generate_client_dataset(1.8, 0, 0)


def test_vapour_rates_spread_apart():
    # L = 1.3 is admissible for both V = 1.6 and V = 2.0
    sig = generate_input_signal(5, colsim.TRAIN_DURATION, 1.6)
    same = ColumnInputs(sig.switch_times, sig.xF, np.full(sig.n_segments, 1.3))
    a = simulate_trajectory(ColumnParams(V=1.6), np.full(10, 0.5), same, colsim.TRAIN_DURATION)
    b = simulate_trajectory(ColumnParams(V=2.0), np.full(10, 0.5), same, colsim.TRAIN_DURATION)
    assert np.max(np.abs(a.states - b.states)) > 1e-3


def test_csv_round_trip(tmp_path, small_column):
    t = small_column[0][1.8][0]
    t.to_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,xF,L"
    back = Trajectory.from_csv(tmp_path / "t.csv", V=1.8)
    assert np.array_equal(back.states, t.states) and np.array_equal(back.inputs, t.inputs)
    assert np.array_equal(back.times, t.times)
