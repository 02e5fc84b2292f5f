"""Regression metrics, RIPtoP and seed summaries."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

# metric value of an ideal model
PERFECT_MSE = 0.0
PERFECT_MAE = 0.0
PERFECT_R2 = 1.0


@dataclass(frozen=True)
class MetricReport:
    mse: float
    mae: float
    r2: float
    n: int


@dataclass(frozen=True)
class SeedSummary:
    values: tuple[float, ...]
    mean: float
    stderr: float

    @property
    def num_seeds(self) -> int:
        return len(self.values)


def regression_metrics(pred, label) -> MetricReport:
    """MSE, MAE and R^2.

    With zero label variance, R^2 is 1 for an exact fit and ``-inf`` otherwise.
    """
    p = np.asarray(pred, dtype=np.float64).ravel()
    y = np.asarray(label, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {y.size} labels")
    if p.size == 0:
        raise ValueError("empty input")
    r = p - y
    ss_res = float(np.dot(r, r))
    dev = y - y.mean()
    ss_tot = float(np.dot(dev, dev))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else -math.inf
    else:
        r2 = 1.0 - ss_res / ss_tot
    return MetricReport(ss_res / p.size, float(np.abs(r).mean()), r2, int(p.size))


def riptop(metric_moi: float, metric_baseline: float, metric_perfect: float = PERFECT_MSE) -> float:
    """Fraction of the baseline-to-perfect gap closed by the model of interest."""
    denom = metric_perfect - metric_baseline
    if denom == 0:
        raise ZeroDivisionError("perfect and baseline metrics coincide")
    return (metric_moi - metric_baseline) / denom


def multistep_mse(params, test_trajectories) -> float:
    """Open-loop rollout MSE over all steps, states and trajectories (scaled data)."""
    from .models.koopman import koopman_rollout

    sq, count = 0.0, 0
    for traj in test_trajectories:
        states = np.asarray(traj.states, dtype=np.float64)
        pred = koopman_rollout(params, states[0], traj.inputs)
        r = pred - states
        sq += float(np.dot(r.ravel(), r.ravel()))
        count += r.size
    if count == 0:
        raise ValueError("no test trajectories")
    return sq / count


def summarize_seeds(values: Sequence[float]) -> SeedSummary:
    """Mean and standard error (sample std / sqrt(n)); stderr is nan for one value."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one value")
    values = tuple(float(x) for x in v)
    if v.size >= 2 and np.all(v == v[0]):
        return SeedSummary(values, values[0], 0.0)  # exact for identical seeds
    mean = math.fsum(values) / v.size
    se = math.sqrt(math.fsum((x - mean) ** 2 for x in values) / (v.size - 1) / v.size) if v.size >= 2 else math.nan
    return SeedSummary(values, mean, se)
