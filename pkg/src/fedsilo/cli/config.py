"""Experiment configuration documents and the desk/paper profiles."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..fedproto import (ACTIVITY_EVEN_RANDOM, ACTIVITY_UNEVEN_SCAFFOLD, COLUMN_SYSID, FEDAVG_FULL,
                        FEDPER_PARTIAL, SCENARIOS, FederationConfig)
from ..models.spec import GNN_MIXTURE, KOOPMAN_WIENER, ModelSpec

PROFILES = ("desk", "paper")


class UsageError(ValueError):
    """Configuration problem; the CLI exits with status 2."""


# profile defaults; a config document only needs to override what differs
_ACTIVITY_FED = {
    "rounds": 10, "local_epochs": 20, "batch_size": 32, "lr0": 1e-3, "lr_decay": 0.98,
    "early_stop_patience": 5, "optimizer": "adam",
}
_COLUMN_FED = {
    "rounds": 10, "local_epochs": 20, "batch_size": 2, "lr0": 1e-2, "lr_decay": 0.98,
    "early_stop_patience": 10, "optimizer": "adam",
}
DEFAULTS: dict[tuple[str, str], dict[str, Any]] = {
    ("activity", "desk"): {"data": {"source": "synthetic", "seed": 0, "n_samples": 2000},
                           "federation": _ACTIVITY_FED, "num_seeds": 10},
    ("activity", "paper"): {"data": {"source": "synthetic", "seed": 0, "n_samples": 18016},
                            "federation": {**_ACTIVITY_FED, "rounds": 30, "local_epochs": 150},
                            "num_seeds": 10},
    ("column", "desk"): {"data": {"source": "synthetic", "seed": 0, "n_rich": 24, "n_scarce": 2,
                                  "n_full": 24, "V_values": [1.6, 1.7, 1.8, 1.9, 2.0], "target_V": 1.9},
                         "federation": _COLUMN_FED, "num_seeds": 10},
    ("column", "paper"): {"data": {"source": "synthetic", "seed": 0, "n_rich": 192, "n_scarce": 2,
                                   "n_full": 192, "V_values": [1.6, 1.7, 1.8, 1.9, 2.0], "target_V": 1.9},
                          "federation": {**_COLUMN_FED, "rounds": 30, "local_epochs": 150},
                          "num_seeds": 10},
}
ARMS = ("private", "centralized", "federated")


def family(scenario: str) -> str:
    return "column" if scenario == COLUMN_SYSID else "activity"


@dataclass
class ExperimentConfig:
    scenario: str
    profile: str
    data: dict
    federation: FederationConfig
    num_seeds: int
    first_seed: int = 0
    arms: tuple[str, ...] = ARMS
    output_dir: str | None = None
    allow_mode_override: bool = False

    @property
    def family(self) -> str:
        return family(self.scenario)

    @property
    def seeds(self) -> list[int]:
        return list(range(self.first_seed, self.first_seed + self.num_seeds))

    def model_spec(self, seed: int) -> ModelSpec:
        return ModelSpec(KOOPMAN_WIENER if self.family == "column" else GNN_MIXTURE, seed=seed)

    def federation_for(self, seed: int, shared: list[str] | None = None) -> FederationConfig:
        fed = self.federation.replace(seed=seed)
        if fed.aggregation_mode == FEDPER_PARTIAL and not fed.shared_segment_names:
            fed = fed.replace(shared_segment_names=tuple(shared or self.model_spec(seed).shared_segments()))
        return fed

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "profile": self.profile, "data": self.data,
                "federation": self.federation.to_dict(), "num_seeds": self.num_seeds,
                "first_seed": self.first_seed, "arms": list(self.arms),
                "allow_mode_override": self.allow_mode_override}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def build_config(doc: dict, *, profile: str | None = None, seed: int | None = None,
                 rounds: int | None = None) -> ExperimentConfig:
    """Validate a config document and fill in profile defaults."""
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise UsageError(f"scenario must be one of {list(SCENARIOS)}, got {scenario!r}")
    prof = profile or doc.get("profile", "desk")
    if prof not in PROFILES:
        raise UsageError(f"profile must be one of {list(PROFILES)}, got {prof!r}")
    fam = family(scenario)
    merged = _merge(DEFAULTS[(fam, prof)], {k: v for k, v in doc.items() if k in ("data", "federation", "num_seeds")})
    fed_doc = dict(merged["federation"])
    default_mode = FEDPER_PARTIAL if scenario == ACTIVITY_UNEVEN_SCAFFOLD else FEDAVG_FULL
    fed_doc.setdefault("aggregation_mode", default_mode)
    fed_doc.setdefault("K", 5 if fam == "column" else 4)
    if rounds is not None:
        fed_doc["rounds"] = rounds
    first_seed = int(doc.get("first_seed", doc.get("seed", 0)) if seed is None else seed)
    allow = bool(doc.get("allow_mode_override", False))
    if fed_doc["aggregation_mode"] == FEDPER_PARTIAL and scenario != ACTIVITY_UNEVEN_SCAFFOLD and not allow:
        raise UsageError("fedper_partial is only paired with activity_uneven_scaffold "
                         "(set allow_mode_override to force it)")
    if scenario == ACTIVITY_UNEVEN_SCAFFOLD and fed_doc.get("K", 4) != 4:
        raise UsageError("activity_uneven_scaffold needs K = 4")
    if fam == "column":
        n_clients = len(merged["data"].get("V_values", []))
        if fed_doc["K"] != n_clients:
            raise UsageError(f"column_sysid: K={fed_doc['K']} but {n_clients} V values")
    fed_doc["shared_segment_names"] = tuple(fed_doc.get("shared_segment_names", ()))
    if fed_doc["aggregation_mode"] == FEDPER_PARTIAL and not fed_doc["shared_segment_names"]:
        spec = ModelSpec(KOOPMAN_WIENER if fam == "column" else GNN_MIXTURE)
        fed_doc["shared_segment_names"] = tuple(spec.shared_segments())
    try:
        fed = FederationConfig(**fed_doc)
    except TypeError as exc:
        raise UsageError(f"bad federation field: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    arms = tuple(doc.get("arms", ARMS))
    if not set(arms) <= set(ARMS):
        raise UsageError(f"arms must be a subset of {list(ARMS)}")
    num_seeds = int(merged.get("num_seeds", 1))
    if num_seeds < 1:
        raise UsageError("num_seeds must be >= 1")
    return ExperimentConfig(scenario, prof, merged["data"], fed, num_seeds, first_seed, arms,
                            doc.get("output_dir"), allow)


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    return build_config(doc, **overrides)


def default_config(scenario: str, profile: str = "desk", **overrides) -> ExperimentConfig:
    return build_config({"scenario": scenario, "profile": profile}, **overrides)


__all__ = [
    "ACTIVITY_EVEN_RANDOM",
    "ARMS",
    "DEFAULTS",
    "ExperimentConfig",
    "PROFILES",
    "UsageError",
    "build_config",
    "default_config",
    "family",
    "load_config",
]
