"""Round orchestration, centralized training and private baselines."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Any

from ..data.partition import ClientDataset
from ..models.spec import ModelSpec, init_model
from ..numcore import ParameterVector
from .aggregation import Update, aggregate
from .codec import BROADCAST, RoundMessage, encode_message
from .config import FEDAVG_FULL, FEDPER_PARTIAL, FederationConfig
from .training import LocalMetrics, local_train
from .transport import FederatedClient, FederationError, check_reply, make_transport

# shuffle stream of standalone (private or centralized) training
STANDALONE_STREAM = 0


@dataclass
class Scenario:
    name: str
    spec: ModelSpec
    clients: list[ClientDataset]
    task: Any
    meta: dict = field(default_factory=dict)

    def initial_params(self, seed: int) -> ParameterVector:
        return init_model(dataclasses.replace(self.spec, seed=seed))


@dataclass
class RoundRecord:
    round: int
    local_test_mse: dict[int, float]
    global_test_mse: dict[int, float]
    param_change: float
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class FederationResult:
    records: list[RoundRecord]
    global_params: ParameterVector
    client_params: dict[int, ParameterVector]
    converged: bool

    def __len__(self) -> int:
        return len(self.records)


def _validate(scenario: Scenario, config: FederationConfig, w0: ParameterVector) -> None:
    if config.K != len(scenario.clients):
        raise FederationError(f"config K={config.K} but scenario has {len(scenario.clients)} clients")
    ids = [c.client_id for c in scenario.clients]
    if len(set(ids)) != len(ids):
        raise FederationError("duplicate client ids")
    if config.aggregation_mode == FEDPER_PARTIAL:
        shared = set(config.shared_segment_names)
        if not shared or not shared < set(w0.names):
            raise FederationError("fedper needs a nonempty proper subset of the model's segments")


def run_federation(scenario: Scenario, config: FederationConfig) -> FederationResult:
    """FedAvg/FedPer rounds until ``config.rounds`` or a max-norm change below the tolerance.

    The first broadcast carries the full initial model; later FedPer broadcasts
    carry only the shared segments.
    """
    w0 = scenario.initial_params(config.seed)
    _validate(scenario, config, w0)
    fedper = config.aggregation_mode == FEDPER_PARTIAL
    shared_names = config.shared_segment_names if fedper else None
    clients = [FederatedClient(c, scenario.task, config) for c in scenario.clients]
    by_id = {c.client_id: c for c in clients}
    transport = make_transport(clients, config)
    records: list[RoundRecord] = []
    current = w0.select(shared_names) if fedper else w0
    converged = False
    try:
        for r in range(1, config.rounds + 1):
            t0 = time.perf_counter()
            payload = w0 if r == 1 else current
            blob = encode_message(RoundMessage(BROADCAST, r, payload))
            replies = transport.exchange({cid: blob for cid in sorted(by_id)})
            uploads = [check_reply(cid, replies[cid], r) for cid in sorted(replies)]
            local = {cid: by_id[cid].local_test_mse for cid in sorted(by_id)}
            new = aggregate([Update(m.client_id, m.segments, m.n_k) for m in uploads],
                            config.aggregation_mode, shared_names)
            change = new.max_abs_diff(current)
            current = new
            glob = {cid: scenario.task.mse(by_id[cid].model_with(current), by_id[cid].dataset.test)
                    for cid in sorted(by_id)}
            records.append(RoundRecord(r, local, glob, change, time.perf_counter() - t0))
            if change < config.convergence_tol:
                converged = True
                break
    finally:
        transport.close()
    client_params = {cid: c.model_with(current) for cid, c in by_id.items()}
    return FederationResult(records, current, client_params, converged)


@dataclass
class StandaloneResult:
    params: ParameterVector
    test_mse: float
    metrics: LocalMetrics


def train_standalone(scenario: Scenario, dataset: ClientDataset,
                     config: FederationConfig) -> StandaloneResult:
    """One model on one dataset with the federated epoch budget (``R * E`` by default)."""
    w0 = scenario.initial_params(config.seed)
    w, metrics = local_train(w0, dataset, config, scenario.task, round_index=1,
                             epochs=config.standalone_epochs, stream=STANDALONE_STREAM)
    return StandaloneResult(w, scenario.task.mse(w, dataset.test), metrics)


def run_private_baselines(scenario: Scenario, config: FederationConfig) -> dict[int, StandaloneResult]:
    return {c.client_id: train_standalone(scenario, c, config) for c in scenario.clients}


def pool_clients(clients: list[ClientDataset]) -> ClientDataset:
    """Concatenate client datasets in id order, keeping every split assignment."""
    samples: list = []
    splits: dict[str, list[int]] = {"train": [], "val": [], "test": []}
    for c in sorted(clients, key=lambda c: c.client_id):
        off = len(samples)
        samples.extend(c.samples)
        for name in splits:
            splits[name].extend(i + off for i in c.splits.get(name, []))
    return ClientDataset(0, samples, splits, tag="pooled")


@dataclass
class CentralizedResult:
    params: ParameterVector
    pooled_test_mse: float
    client_test_mse: dict[int, float]
    n_train: int
    metrics: LocalMetrics


def run_centralized(scenario: Scenario, config: FederationConfig) -> CentralizedResult:
    pooled = pool_clients(scenario.clients)
    res = train_standalone(scenario, pooled, config)
    per_client = {c.client_id: scenario.task.mse(res.params, c.test) for c in scenario.clients}
    return CentralizedResult(res.params, res.test_mse, per_client, pooled.n_k, res.metrics)


__all__ = [
    "FEDAVG_FULL",
    "CentralizedResult",
    "FederationResult",
    "RoundRecord",
    "Scenario",
    "StandaloneResult",
    "pool_clients",
    "run_centralized",
    "run_federation",
    "run_private_baselines",
    "train_standalone",
]
