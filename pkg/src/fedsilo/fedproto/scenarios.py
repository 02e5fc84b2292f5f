"""Builders for the two case-study scenarios."""
from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from ..colsim import Trajectory
from ..data.activity import ActivitySample
from ..data.partition import (ClientDataset, partition_by_condition, partition_even_random,
                              partition_uneven_scaffold, split_train_val_test)
from ..data.scaling import MinMaxScaler
from ..models.spec import GNN_MIXTURE, KOOPMAN_WIENER, ModelSpec
from .federation import Scenario
from .tasks import ActivityTask, ColumnTask

ACTIVITY_EVEN_RANDOM = "activity_even_random"
ACTIVITY_UNEVEN_SCAFFOLD = "activity_uneven_scaffold"
COLUMN_SYSID = "column_sysid"
SCENARIOS = (ACTIVITY_EVEN_RANDOM, ACTIVITY_UNEVEN_SCAFFOLD, COLUMN_SYSID)


def _train_temperature_range(clients: Sequence[ClientDataset]) -> tuple[float, float]:
    temps = [s.temperature for c in clients for s in c.train]
    return min(temps), max(temps)


def activity_scenario(name: str, samples: Sequence[ActivitySample], seed: int, k_clients: int = 4,
                      spec: ModelSpec | None = None) -> Scenario:
    """Even-random or uneven-scaffold activity scenario.

    Temperatures are scaled with the range of all clients' training splits;
    temperature bounds are public process knowledge, not private data.
    """
    if name == ACTIVITY_EVEN_RANDOM:
        clients = partition_even_random(samples, k_clients, seed)
    elif name == ACTIVITY_UNEVEN_SCAFFOLD:
        if k_clients != 4:
            raise ValueError("the uneven-scaffold scenario is defined for four clients")
        clients = partition_uneven_scaffold(samples, seed=seed)
    else:
        raise ValueError(f"not an activity scenario: {name!r}")
    task = ActivityTask(_train_temperature_range(clients))
    spec = spec or ModelSpec(GNN_MIXTURE, seed=seed)
    return Scenario(name, spec, clients, task, meta={"t_range": task.t_range})


def model_inputs(traj: Trajectory, F: float = 1.0) -> np.ndarray:
    """Model input channels ``(x_F, (L - (V - F)) / F)``.

    Each operator knows its own ``V``; expressing the reflux as a position in
    the admissible band ``(V - F, V)`` keeps the distillate/bottoms split
    comparable across operating conditions.
    """
    u = np.array(traj.inputs, dtype=np.float64)
    u[:, 1] = (u[:, 1] - (traj.V - F)) / F
    return u


def _scaled(traj: Trajectory, sx: MinMaxScaler, su: MinMaxScaler) -> Trajectory:
    return Trajectory(traj.times, sx.transform(traj.states), su.transform(model_inputs(traj)), traj.V,
                      dict(traj.meta))


def fit_column_scalers(source: Sequence[Trajectory]) -> tuple[MinMaxScaler, MinMaxScaler]:
    states = np.concatenate([t.states for t in source])
    inputs = np.concatenate([model_inputs(t) for t in source])
    return MinMaxScaler().fit(states), MinMaxScaler().fit(inputs)


def column_scenario(train_sets: Mapping[float, Sequence[Trajectory]],
                    test_sets: Mapping[float, Sequence[Trajectory]], seed: int,
                    spec: ModelSpec | None = None, lambda_rec: float = 1.0) -> Scenario:
    """One client per vapour rate; scalers fitted on the lowest-V client's training split."""
    raw = partition_by_condition(train_sets, seed=seed, test_sets=test_sets)
    sx, su = fit_column_scalers(raw[0].train)
    clients = [ClientDataset(c.client_id, [_scaled(t, sx, su) for t in c.samples], c.splits,
                             c.tag, dict(c.meta)) for c in raw]
    spec = spec or ModelSpec(KOOPMAN_WIENER, seed=seed)
    return Scenario(COLUMN_SYSID, spec, clients, ColumnTask(lambda_rec),
                    meta={"state_scaler": sx, "input_scaler": su,
                          "target_client": next((c.client_id for c in clients if c.tag == "target"), None)})


def column_reference_client(scenario: Scenario, trajectories: Sequence[Trajectory],
                            test: Sequence[Trajectory], seed: int, client_id: int = 99,
                            fractions=(0.85, 0.15)) -> ClientDataset:
    """A standalone dataset scaled like ``scenario`` (e.g. a full-data same-V baseline)."""
    sx, su = scenario.meta["state_scaler"], scenario.meta["input_scaler"]
    trajs = [_scaled(t, sx, su) for t in trajectories]
    held = [_scaled(t, sx, su) for t in test]
    sv = split_train_val_test(trajs, seed, list(fractions) + [0.0], stream=client_id)
    splits = {"train": sv["train"], "val": sv["val"],
              "test": list(range(len(trajs), len(trajs) + len(held)))}
    return ClientDataset(client_id, trajs + held, splits, tag="reference")
