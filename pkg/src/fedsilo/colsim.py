"""Constant-molar-overflow binary distillation column (10 stages).

Stage 1 is the total condenser, stages 2-9 are trays and stage 10 is the
reboiler. States are light-component liquid mole fractions; inputs are the
feed composition ``x_F`` and the reflux/liquid rate ``L``. The vapour rate
``V`` is a per-client constant.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy.optimize import fsolve

N_STAGES = 10
SAMPLE_DT = 60.0  # s
# s; RK4 is stable below 0.11 s (|lambda_max| ~ 25 1/s), but step-halving from
# far-from-equilibrium starts only stays under 1e-7 at this step
INTERNAL_DT = 0.02
STEP_SEGMENT = 1800.0  # s between input steps
XF_RANGE = (0.3, 0.7)
NOMINAL_XF = 0.5
STATE_TOL = 1e-9
V_VALUES = (1.6, 1.7, 1.8, 1.9, 2.0)
TRAIN_DURATION = 3600.0
TEST_DURATION = 5 * 3600.0


class AdmissibilityError(ValueError):
    """Inputs that would make distillate or bottoms flow non-positive."""


class IntegrationError(RuntimeError):
    """State left the unit interval during integration."""


@dataclass(frozen=True)
class ColumnParams:
    V: float
    n_stages: int = N_STAGES
    feed_stage: int = 5
    alpha: float = 3.55
    F: float = 1.0
    holdups: tuple[float, ...] = (5.0,) + (0.5,) * 8 + (5.0,)

    def __post_init__(self):
        if not self.V > 0:
            raise ValueError("vapour rate must be positive")
        if self.n_stages != N_STAGES or len(self.holdups) != N_STAGES:
            raise ValueError("the column model has exactly 10 stages")

    @property
    def L_bounds(self) -> tuple[float, float]:
        """Open interval of admissible liquid rates: V - F < L < V."""
        return self.V - self.F, self.V

    @property
    def nominal_L(self) -> float:
        lo, hi = self.L_bounds
        return max(lo, 0.0) + 0.5 * (hi - max(lo, 0.0))

    def check_admissible(self, L) -> None:
        lo, hi = self.L_bounds
        L = np.asarray(L, dtype=float)
        if np.any(L >= hi) or np.any(L <= lo) or np.any(L <= 0):
            raise AdmissibilityError(f"L must lie in ({lo:g}, {hi:g}) for V={self.V:g}")


@dataclass
class ColumnInputs:
    """Piecewise-constant inputs: value ``k`` holds on ``[switch_times[k], switch_times[k+1])``."""

    switch_times: np.ndarray
    xF: np.ndarray
    L: np.ndarray

    def at(self, t: float) -> tuple[float, float]:
        k = int(np.searchsorted(self.switch_times, t, side="right") - 1)
        k = min(max(k, 0), len(self.xF) - 1)
        return float(self.xF[k]), float(self.L[k])

    @property
    def n_segments(self) -> int:
        return len(self.xF)

    @classmethod
    def constant(cls, xF: float, L: float) -> ColumnInputs:
        return cls(np.array([0.0]), np.array([xF], float), np.array([L], float))


@dataclass
class Trajectory:
    times: np.ndarray  # (p,)
    states: np.ndarray  # (p, 10)
    inputs: np.ndarray  # (p, 2) columns (x_F, L)
    V: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.times)

    def to_csv(self, path: str | Path) -> None:
        header = ["t"] + [f"x{i}" for i in range(1, N_STAGES + 1)] + ["xF", "L"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, x, u in zip(self.times, self.states, self.inputs):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(float(v)) for v in u])

    @classmethod
    def from_csv(cls, path: str | Path, V: float = float("nan")) -> Trajectory:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0].copy(), data[:, 1:1 + N_STAGES].copy(), data[:, 1 + N_STAGES:].copy(), V)


@numba.njit(cache=True)
def _rhs(x, xF, L, V, alpha, F, feed_idx, inv_M, out):
    n = x.shape[0]
    B = L + F - V
    y_next = alpha * x[1] / (1.0 + (alpha - 1.0) * x[1])
    out[0] = V * (y_next - x[0]) * inv_M[0]
    lam_prev = L  # liquid leaving stage 1 (reflux)
    for i in range(1, n - 1):
        lam = L + F if i >= feed_idx else L
        y_i = y_next
        y_next = alpha * x[i + 1] / (1.0 + (alpha - 1.0) * x[i + 1])
        d = lam_prev * x[i - 1] - lam * x[i] + V * (y_next - y_i)
        if i == feed_idx:
            d += F * xF
        out[i] = d * inv_M[i]
        lam_prev = lam
    out[n - 1] = (lam_prev * x[n - 2] - V * y_next - B * x[n - 1]) * inv_M[n - 1]


@numba.njit(cache=True)
def _integrate(x0, seg_end_steps, seg_xF, seg_L, V, alpha, F, feed_idx, inv_M,
               h, steps_per_sample, n_samples, lo, hi):
    """Fixed-step RK4 over a batch of initial states.

    Returns (samples, status) where status[b] is -1 on success or the sample
    index at which run ``b`` left ``[lo, hi]``.
    """
    nb, n = x0.shape
    out = np.empty((nb, n_samples, n))
    status = np.full(nb, -1)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for b in range(nb):
        x = x0[b].copy()
        out[b, 0] = x
        seg = 0
        step = 0
        for s in range(1, n_samples):
            for _ in range(steps_per_sample):
                while seg_end_steps[b, seg] <= step:
                    seg += 1
                xF = seg_xF[b, seg]
                L = seg_L[b, seg]
                _rhs(x, xF, L, V, alpha, F, feed_idx, inv_M, k1)
                for i in range(n):
                    tmp[i] = x[i] + 0.5 * h * k1[i]
                _rhs(tmp, xF, L, V, alpha, F, feed_idx, inv_M, k2)
                for i in range(n):
                    tmp[i] = x[i] + 0.5 * h * k2[i]
                _rhs(tmp, xF, L, V, alpha, F, feed_idx, inv_M, k3)
                for i in range(n):
                    tmp[i] = x[i] + h * k3[i]
                _rhs(tmp, xF, L, V, alpha, F, feed_idx, inv_M, k4)
                for i in range(n):
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                step += 1
            out[b, s] = x
            bad = False
            for i in range(n):
                if not (lo <= x[i] <= hi):
                    bad = True
            if bad:
                status[b] = s
                break
    return out, status


def column_derivatives(params: ColumnParams, x, u) -> np.ndarray:
    """dx/dt for states ``x`` (10,) and inputs ``u = (x_F, L)``."""
    xF, L = float(u[0]), float(u[1])
    params.check_admissible(L)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty(N_STAGES)
    _rhs(x, xF, L, params.V, params.alpha, params.F, params.feed_stage - 1,
         1.0 / np.asarray(params.holdups), out)
    return out


def simulate_batch(params: ColumnParams, x0, inputs: list[ColumnInputs], duration: float,
                   internal_dt: float = INTERNAL_DT, sample_dt: float = SAMPLE_DT) -> list[Trajectory]:
    """Integrate several runs that share ``params`` (one ``ColumnInputs`` each)."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    if x0.shape[0] == 1 and len(inputs) > 1:
        x0 = np.repeat(x0, len(inputs), axis=0)
    if x0.shape != (len(inputs), N_STAGES):
        raise ValueError(f"x0 must have shape ({len(inputs)}, {N_STAGES})")
    if np.any(x0 < -STATE_TOL) or np.any(x0 > 1 + STATE_TOL):
        raise ValueError("initial state must lie in [0, 1]")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    steps_per_sample = int(round(sample_dt / internal_dt))
    if abs(steps_per_sample * internal_dt - sample_dt) > 1e-9 * sample_dt:
        raise ValueError("sample interval must be a multiple of the internal step")
    # samples at t = 0, dt, ..., duration - dt (p = duration / dt); zero duration gives x0 only
    n_samples = max(1, int(np.floor(duration / sample_dt + 1e-9)))
    n_seg = max(u.n_segments for u in inputs)
    seg_end = np.full((len(inputs), n_seg + 1), np.iinfo(np.int64).max, dtype=np.int64)
    seg_xF = np.zeros((len(inputs), n_seg + 1))
    seg_L = np.zeros((len(inputs), n_seg + 1))
    for b, u in enumerate(inputs):
        params.check_admissible(u.L)
        starts = np.round(np.asarray(u.switch_times) / internal_dt).astype(np.int64)
        seg_end[b, :u.n_segments - 1] = starts[1:]
        seg_xF[b, :u.n_segments] = u.xF
        seg_L[b, :u.n_segments] = u.L
    samples, status = _integrate(
        x0, seg_end, seg_xF, seg_L, float(params.V), float(params.alpha), float(params.F),
        params.feed_stage - 1, 1.0 / np.asarray(params.holdups, dtype=np.float64),
        float(internal_dt), steps_per_sample, n_samples, -STATE_TOL, 1.0 + STATE_TOL)
    bad = np.flatnonzero(status >= 0)
    if bad.size:
        raise IntegrationError(
            f"run {bad[0]} left [0, 1] at sample {status[bad[0]]} (V={params.V:g})")
    times = np.arange(n_samples) * sample_dt
    trajs = []
    for b, u in enumerate(inputs):
        uu = np.array([u.at(t) for t in times])
        trajs.append(Trajectory(times.copy(), samples[b], uu, params.V))
    return trajs


def simulate_trajectory(params: ColumnParams, x0, inputs: ColumnInputs, duration: float,
                        internal_dt: float = INTERNAL_DT) -> Trajectory:
    return simulate_batch(params, x0, [inputs], duration, internal_dt=internal_dt)[0]


def steady_state(params: ColumnParams, xF: float = NOMINAL_XF, L: float | None = None) -> np.ndarray:
    """Root of the column equations at constant inputs (polished with fsolve)."""
    L = params.nominal_L if L is None else L
    params.check_admissible(L)
    x0 = np.linspace(0.95, 0.05, N_STAGES)
    x = simulate_trajectory(params, x0, ColumnInputs.constant(xF, L), 4 * 3600.0).states[-1]
    x = fsolve(lambda z: column_derivatives(params, z, (xF, L)), x, xtol=1e-12)
    return np.clip(x, 0.0, 1.0)


def generate_input_signal(seed: int, duration: float, V: float, F: float = 1.0) -> ColumnInputs:
    """Random steps every 30 min; ``L`` stays 10% inside ``(V - F, V)`` at each end.

    The draws depend only on ``seed``: the same seed gives the same position
    within each vapour rate's own admissible band, so distillate and bottoms
    flows match across ``V``.
    """
    return _step_signal(seed, duration, max(V - F, 0.0), V)


def _step_signal(seed: int, duration: float, lo: float, hi: float) -> ColumnInputs:
    if not duration > 0:
        raise ValueError("duration must be positive")
    n_seg = int(np.ceil(duration / STEP_SEGMENT - 1e-9))
    rng = np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), 0x51C]))
    xF = rng.uniform(*XF_RANGE, size=n_seg)
    s = rng.uniform(0.1, 0.9, size=n_seg)
    L = lo + s * (hi - lo)
    return ColumnInputs(np.arange(n_seg) * STEP_SEGMENT, xF, L)


def generate_client_dataset(V: float, n_trajectories: int, seed: int,
                            duration: float = TRAIN_DURATION) -> list[Trajectory]:
    """Step-response trajectories starting from the nominal steady state for ``V``."""
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    params = ColumnParams(V=V)
    x0 = steady_state(params)
    signals = [generate_input_signal(_traj_seed(seed, k, V), duration, V) for k in range(n_trajectories)]
    trajs = simulate_batch(params, x0, signals, duration)
    for k, t in enumerate(trajs):
        t.meta = {"V": V, "index": k, "seed": seed}
    return trajs


def generate_test_trajectory(V: float, seed: int) -> Trajectory:
    """Five-hour test run; every ``V`` gets the same relative input protocol."""
    params = ColumnParams(V=V)
    x0 = steady_state(params)
    sig = generate_input_signal(_test_seed(seed), TEST_DURATION, V)
    traj = simulate_trajectory(params, x0, sig, TEST_DURATION)
    traj.meta = {"V": V, "test": True, "seed": seed}
    return traj


def _traj_seed(seed: int, index: int, V: float) -> int:
    return (int(seed) * 1_000_003 + index * 7_919 + int(round(V * 1000)) + 1) & (2**63 - 1)


def _test_seed(seed: int) -> int:
    return (int(seed) * 1_000_003 + 0x7E57) & (2**63 - 1) | (1 << 62)
