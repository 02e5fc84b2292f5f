from __future__ import annotations

from collections.abc import Iterable, Sequence
from typing import NamedTuple

import numpy as np

from ..numcore import ParameterVector, StructureError
from .config import FEDAVG_FULL, FEDPER_PARTIAL


class AggregationError(ValueError):
    pass


class Update(NamedTuple):
    client_id: int
    params: ParameterVector
    n_k: int


def _normalize(updates: Iterable) -> list[Update]:
    out = []
    for pos, u in enumerate(updates):
        if isinstance(u, Update):
            out.append(u)
        elif len(u) == 2:
            out.append(Update(pos, u[0], u[1]))
        else:
            out.append(Update(*u))
    return sorted(out, key=lambda u: u.client_id)


def aggregate(updates: Sequence, mode: str = FEDAVG_FULL,
              shared_names: Sequence[str] | None = None) -> ParameterVector:
    """Weighted mean ``sum_k (n_k / n) w_k`` in ascending client-id order.

    Evaluated as ``w_1 + sum_k (n_k / n)(w_k - w_1)``, which is algebraically
    identical and exact when all uploads agree.

    ``updates`` holds :class:`Update` tuples or plain ``(w_k, n_k)`` pairs
    (list position then acts as the client id). In ``fedper_partial`` mode
    only the shared segments are averaged and returned.
    """
    ups = _normalize(updates)
    if not ups:
        raise AggregationError("no updates to aggregate")
    if mode == FEDPER_PARTIAL:
        if shared_names is not None:
            ups = [Update(u.client_id, u.params.select(shared_names), u.n_k) for u in ups]
    elif mode != FEDAVG_FULL:
        raise AggregationError(f"unknown aggregation mode {mode!r}")
    if any(u.n_k < 0 for u in ups):
        raise AggregationError("negative client weight")
    n = sum(u.n_k for u in ups)
    if n <= 0:
        raise AggregationError("total aggregation weight is zero")
    first = ups[0].params
    for u in ups[1:]:
        try:
            first.check_compatible(u.params, f"aggregate (client {u.client_id})")
        except StructureError as exc:
            raise AggregationError(str(exc)) from exc
    if len(ups) == 1:
        return first
    # anchored at the first update so identical uploads come back bitwise unchanged
    out = []
    for name, a in first.items():
        delta = (ups[1].n_k / n) * (ups[1].params[name] - a)
        for u in ups[2:]:
            delta = delta + (u.n_k / n) * (u.params[name] - a)
        out.append((name, np.where(delta == 0.0, a, a + delta)))
    return ParameterVector(out)
