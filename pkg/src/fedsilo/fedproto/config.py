from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

FEDAVG_FULL = "fedavg_full"
FEDPER_PARTIAL = "fedper_partial"
TRANSPORTS = ("in_process", "socket")


@dataclass(frozen=True)
class FederationConfig:
    """Round protocol and local optimisation settings shared by all clients."""

    K: int = 4
    rounds: int = 10
    local_epochs: int = 20
    batch_size: int = 32
    lr0: float = 1e-3
    lr_decay: float = 0.98
    early_stop_patience: int = 5
    aggregation_mode: str = FEDAVG_FULL
    shared_segment_names: tuple[str, ...] = ()
    seed: int = 0
    transport: str = "in_process"
    optimizer: str = "sgd"
    min_improvement: float = 1e-6
    convergence_tol: float = 1e-7
    baseline_epochs: int | None = None
    port: int = 0
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.local_epochs < 0 or self.batch_size < 1:
            raise ValueError("local_epochs must be >= 0 and batch_size >= 1")
        if self.aggregation_mode not in (FEDAVG_FULL, FEDPER_PARTIAL):
            raise ValueError(f"unknown aggregation mode {self.aggregation_mode!r}")
        if self.aggregation_mode == FEDPER_PARTIAL and not self.shared_segment_names:
            raise ValueError("fedper_partial needs shared_segment_names")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        object.__setattr__(self, "shared_segment_names", tuple(self.shared_segment_names))

    def replace(self, **changes) -> FederationConfig:
        return dataclasses.replace(self, **changes)

    @property
    def standalone_epochs(self) -> int:
        """Epoch budget of private/centralized baselines (matches the federated total)."""
        if self.baseline_epochs is not None:
            return self.baseline_epochs
        return self.rounds * self.local_epochs

    def lr_at(self, epoch: int) -> float:
        return self.lr0 * self.lr_decay ** epoch

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("extra")
        d["shared_segment_names"] = list(self.shared_segment_names)
        return d

    def digest(self) -> bytes:
        """SHA-256 over the protocol-relevant fields (transport and port excluded)."""
        d = self.to_dict()
        d.pop("transport")
        d.pop("port")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).digest()
