"""Client datasets, train/val/test splits and horizontal partitions.

All shuffles first sort samples by a stable key, so results depend only on
the seed and the multiset of samples, not on input order.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from ..chem import scaffold_key
from .activity import ActivitySample, molecule

SPLIT_FRACTIONS = (0.70, 0.15, 0.15)
SCAFFOLD_FRACTIONS = (0.4, 0.3, 0.2, 0.1)
TARGET_V = 1.9


class PartitionError(ValueError):
    """The dataset cannot be partitioned as requested."""


@dataclass
class ClientDataset:
    client_id: int
    samples: list
    splits: dict[str, list[int]]
    tag: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        idx = [i for name in ("train", "val", "test") for i in self.splits.get(name, [])]
        if len(idx) != len(set(idx)):
            raise PartitionError(f"client {self.client_id}: splits overlap")
        if sorted(idx) != list(range(len(self.samples))):
            raise PartitionError(f"client {self.client_id}: splits do not cover all samples")

    @property
    def n_k(self) -> int:
        """Aggregation weight: number of training samples."""
        return len(self.splits["train"])

    def subset(self, split: str) -> list:
        return [self.samples[i] for i in self.splits.get(split, [])]

    @property
    def train(self) -> list:
        return self.subset("train")

    @property
    def val(self) -> list:
        return self.subset("val")

    @property
    def test(self) -> list:
        return self.subset("test")


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), _mix(stream)]))


def _mix(stream: Sequence[int]) -> int:
    h = 0x9E3779B97F4A7C15
    for s in stream:
        h = (h * 1_000_003 + int(s) + 1) & (2**64 - 1)
    return h


def largest_remainder(n: int, fractions: Sequence[float]) -> list[int]:
    """Integer sizes summing to ``n``; remainder ties go to the earlier entry."""
    fr = [Fraction(f).limit_denominator(10**9) for f in fractions]
    total = sum(fr)
    if total <= 0:
        raise ValueError("fractions must have a positive sum")
    exact = [n * f / total for f in fr]
    sizes = [int(e) for e in exact]
    left = n - sum(sizes)
    order = sorted(range(len(fr)), key=lambda k: (-(exact[k] - sizes[k]), k))
    for k in order[:left]:
        sizes[k] += 1
    return sizes


def _min_one(sizes: list[int], active: Sequence[bool]) -> list[int]:
    sizes = list(sizes)
    for k, on in enumerate(active):
        if on and sizes[k] == 0:
            donor = max(range(len(sizes)), key=lambda j: (sizes[j], -j))
            if sizes[donor] <= 1:
                break
            sizes[donor] -= 1
            sizes[k] += 1
    return sizes


def _default_key(sample) -> Any:
    if hasattr(sample, "sort_key"):
        return sample.sort_key()
    meta = getattr(sample, "meta", None)
    if meta is not None:
        return (float(getattr(sample, "V", 0.0)), int(meta.get("index", 0)), bool(meta.get("test", False)))
    return repr(sample)


def _stable_shuffle(indices: Sequence[int], samples: Sequence, rng: np.random.Generator,
                    key: Callable | None) -> list[int]:
    key = key or _default_key
    ordered = sorted(indices, key=lambda i: (key(samples[i]), i))
    perm = rng.permutation(len(ordered))
    return [ordered[p] for p in perm]


def split_train_val_test(samples: Sequence, seed: int, fractions: Sequence[float] = SPLIT_FRACTIONS,
                         key: Callable | None = None, stream: int = 0) -> dict[str, list[int]]:
    """Seeded split by largest-remainder sizes, at least one sample per non-empty fraction."""
    n = len(samples)
    fr = list(fractions) + [0.0] * (3 - len(fractions))
    active = [f > 0 for f in fr]
    if n < sum(active):
        raise PartitionError(f"need at least {sum(active)} samples to split, got {n}")
    sizes = _min_one(largest_remainder(n, fr), active)
    order = _stable_shuffle(range(n), samples, _rng(seed, 0x5917, stream), key)
    a, b = sizes[0], sizes[0] + sizes[1]
    return {"train": sorted(order[:a]), "val": sorted(order[a:b]), "test": sorted(order[b:])}


def _make_clients(samples: Sequence, groups: list[list[int]], seed: int,
                  fractions: Sequence[float], key: Callable | None) -> list[ClientDataset]:
    out = []
    for cid, idx in enumerate(groups, start=1):
        local = [samples[i] for i in sorted(idx, key=lambda i: ((key or _default_key)(samples[i]), i))]
        fr = list(fractions)
        # clients too small for every split keep train first, then val
        while sum(f > 0 for f in fr) > len(local):
            fr[max(k for k, f in enumerate(fr) if f > 0)] = 0.0
        splits = split_train_val_test(local, seed, fr, key=key, stream=cid)
        out.append(ClientDataset(cid, local, splits))
    return out


def partition_even_random(samples: Sequence, k_clients: int, seed: int,
                          fractions: Sequence[float] = SPLIT_FRACTIONS,
                          key: Callable | None = None) -> list[ClientDataset]:
    if k_clients < 2:
        raise PartitionError("need at least two clients")
    if len(samples) < k_clients:
        raise PartitionError(f"{len(samples)} samples cannot fill {k_clients} clients")
    sizes = largest_remainder(len(samples), [1.0] * k_clients)
    order = _stable_shuffle(range(len(samples)), samples, _rng(seed, 0xE7E4), key)
    bounds = np.cumsum([0] + sizes)
    groups = [order[bounds[k]:bounds[k + 1]] for k in range(k_clients)]
    return _make_clients(samples, groups, seed, fractions, key)


def solvent_scaffold(sample: ActivitySample) -> str:
    return _scaffold_of(sample.solvent_smiles)


_SCAFFOLD_CACHE: dict[str, str] = {}


def _scaffold_of(smiles: str) -> str:
    if smiles not in _SCAFFOLD_CACHE:
        _SCAFFOLD_CACHE[smiles] = scaffold_key(molecule(smiles)).key
    return _SCAFFOLD_CACHE[smiles]


def scaffold_targets(n: int, fractions: Sequence[float] = SCAFFOLD_FRACTIONS) -> list[int]:
    return largest_remainder(n, fractions)


def partition_uneven_scaffold(samples: Sequence[ActivitySample],
                              fractions: Sequence[float] = SCAFFOLD_FRACTIONS, seed: int = 0,
                              split_fractions: Sequence[float] = SPLIT_FRACTIONS) -> list[ClientDataset]:
    """Clients 1-2 share the acyclic-solvent group; clients 3-4 receive whole scaffold groups.

    The acyclic group is divided between clients 1 and 2 in the ratio of their
    targets. Cyclic groups go, largest first, to whichever of clients 3/4 has
    the larger shortfall against its target (client 3 on ties).
    """
    if len(fractions) != 4 or abs(sum(fractions) - 1.0) > 1e-9:
        raise PartitionError("uneven-scaffold partition needs four fractions summing to 1")
    targets = scaffold_targets(len(samples), fractions)
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(samples):
        groups.setdefault(solvent_scaffold(s), []).append(i)
    acyclic = groups.pop("ACYCLIC", [])
    if len(acyclic) < targets[0] + targets[1]:
        raise PartitionError(
            f"acyclic solvent group has {len(acyclic)} samples; clients 1+2 need {targets[0] + targets[1]}")
    order = _stable_shuffle(acyclic, samples, _rng(seed, 0x5CAF), None)
    n1, _ = largest_remainder(len(order), [targets[0], targets[1]])
    assigned: list[list[int]] = [order[:n1], order[n1:], [], []]
    for name, idx in sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0])):
        d3 = targets[2] - len(assigned[2])
        d4 = targets[3] - len(assigned[3])
        assigned[2 if d3 >= d4 else 3].extend(idx)
    if not assigned[2] or not assigned[3]:
        raise PartitionError("not enough cyclic scaffold groups to populate clients 3 and 4")
    return _make_clients(samples, assigned, seed, split_fractions, None)


def partition_by_condition(trajectory_sets, seed: int = 0, test_sets=None,
                           train_val_fractions: Sequence[float] = (0.85, 0.15),
                           target_V: float = TARGET_V) -> list[ClientDataset]:
    """One client per operating condition ``V`` (ascending); ``V == target_V`` is tagged.

    ``trajectory_sets`` is a mapping or a sequence of ``(V, trajectories)``
    pairs. With ``test_sets`` the given test trajectories form each client's
    test split and the training trajectories are split into train/val only.
    """
    pairs = list(trajectory_sets.items()) if hasattr(trajectory_sets, "items") else list(trajectory_sets)
    vs = [float(v) for v, _ in pairs]
    if len(set(vs)) != len(vs):
        raise PartitionError("duplicate operating condition")
    tests = dict(test_sets.items()) if test_sets is not None and hasattr(test_sets, "items") else dict(test_sets or [])
    out = []
    for cid, (v, trajs) in enumerate(sorted(pairs, key=lambda p: float(p[0])), start=1):
        trajs = list(trajs)
        if not trajs:
            raise PartitionError(f"no trajectories for V={v}")
        if test_sets is None:
            splits = split_train_val_test(trajs, seed, SPLIT_FRACTIONS, stream=cid)
            samples = trajs
        else:
            held = list(tests.get(v, tests.get(float(v), [])))
            if not held:
                raise PartitionError(f"no test trajectories for V={v}")
            sv = split_train_val_test(trajs, seed, list(train_val_fractions) + [0.0], stream=cid)
            samples = trajs + held
            splits = {"train": sv["train"], "val": sv["val"],
                      "test": list(range(len(trajs), len(trajs) + len(held)))}
        tag = "target" if abs(float(v) - target_V) < 1e-9 else ""
        out.append(ClientDataset(cid, samples, splits, tag=tag, meta={"V": float(v), "n_raw": len(trajs)}))
    return out
