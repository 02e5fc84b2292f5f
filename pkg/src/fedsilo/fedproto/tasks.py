"""Model-family adapters used by the training loop.

A task turns a list of samples into a loss, a gradient and a test MSE for
one model family, so the federation code stays model-agnostic.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .. import numcore as nc
from ..data.activity import ActivitySample, featurized
from ..models.gnn import GraphBatch, activity_loss_fn, gnn_forward
from ..models.koopman import koopman_rollout_batch, trajectory_loss_fn
from ..numcore import ParameterVector

EVAL_CHUNK = 512
EVAL_CACHE = 64


class ActivityTask:
    """ln gamma_inf regression on (solute, solvent, T) samples.

    Temperatures are min-max scaled with ``t_range`` before entering the head.
    """

    kind = "gnn_mixture"

    def __init__(self, t_range: tuple[float, float]):
        lo, hi = float(t_range[0]), float(t_range[1])
        self.t_range = (lo, hi)
        self._span = hi - lo if hi > lo else 1.0
        self._eval_batches: dict[tuple[int, ...], tuple] = {}

    def _eval_batch(self, samples: Sequence[ActivitySample]) -> GraphBatch:
        # val/test sets are evaluated every epoch; the samples are kept in the
        # entry so their ids cannot be recycled while cached
        key = tuple(id(s) for s in samples)
        hit = self._eval_batches.get(key)
        if hit is None:
            if len(self._eval_batches) >= EVAL_CACHE:
                self._eval_batches.clear()
            hit = self._eval_batches[key] = (self.batch(samples)[0], list(samples))
        return hit[0]

    def batch(self, samples: Sequence[ActivitySample]) -> tuple[GraphBatch, np.ndarray]:
        su = [featurized(s.solute_smiles) for s in samples]
        sv = [featurized(s.solvent_smiles) for s in samples]
        t = [(s.temperature - self.t_range[0]) / self._span for s in samples]
        y = np.array([s.ln_gamma_inf for s in samples], dtype=np.float64)
        return GraphBatch.build(su, sv, t), y

    def loss_grad(self, params: ParameterVector, samples: Sequence) -> tuple[float, ParameterVector]:
        batch, y = self.batch(samples)
        return nc.forward_backward(activity_loss_fn, params, batch, y)

    def predict(self, params: ParameterVector, samples: Sequence) -> np.ndarray:
        p = dict(params.items())
        out = []
        for i in range(0, len(samples), EVAL_CHUNK):
            batch = self._eval_batch(samples[i:i + EVAL_CHUNK])
            out.append(np.asarray(gnn_forward(p, batch)).ravel())
        return np.concatenate(out) if out else np.zeros(0)

    def mse(self, params: ParameterVector, samples: Sequence) -> float:
        if not samples:
            raise ValueError("empty sample set")
        y = np.array([s.ln_gamma_inf for s in samples], dtype=np.float64)
        r = self.predict(params, samples) - y
        return float(np.dot(r, r) / r.size)

    def val_loss(self, params: ParameterVector, samples: Sequence) -> float:
        return self.mse(params, samples)


def _groups_by_length(trajs: Sequence) -> list[list]:
    groups: dict[int, list] = {}
    for tr in trajs:
        groups.setdefault(len(tr.times), []).append(tr)
    return [groups[k] for k in sorted(groups)]


class ColumnTask:
    """Koopman/Wiener system identification on scaled column trajectories."""

    kind = "koopman_wiener"

    def __init__(self, lambda_rec: float = 1.0):
        self.lambda_rec = float(lambda_rec)

    @staticmethod
    def _stack(trajs: Sequence) -> tuple[np.ndarray, np.ndarray]:
        return (np.stack([np.asarray(t.states, dtype=np.float64) for t in trajs]),
                np.stack([np.asarray(t.inputs, dtype=np.float64) for t in trajs]))

    def _loss_grad_group(self, params, trajs):
        x, u = self._stack(trajs)
        return nc.forward_backward(trajectory_loss_fn, params, x, u, self.lambda_rec)

    def loss_grad(self, params: ParameterVector, samples: Sequence) -> tuple[float, ParameterVector]:
        groups = _groups_by_length(samples)
        if len(groups) == 1:
            return self._loss_grad_group(params, groups[0])
        # mixed lengths: sample-weighted mean of per-group losses
        total, loss, grad = len(samples), 0.0, None
        for g in groups:
            lg, gg = self._loss_grad_group(params, g)
            w = len(g) / total
            loss += w * lg
            grad = nc.param_axpy(w, gg, grad if grad is not None else gg.zeros_like())
        return loss, grad

    def val_loss(self, params: ParameterVector, samples: Sequence) -> float:
        total = 0.0
        for g in _groups_by_length(samples):
            x, u = self._stack(g)
            total += len(g) * nc.evaluate(trajectory_loss_fn, params, x, u, self.lambda_rec)
        return total / len(samples)

    def mse(self, params: ParameterVector, samples: Sequence) -> float:
        """Multistep open-loop MSE over all steps, states and trajectories."""
        if not samples:
            raise ValueError("empty sample set")
        sq, count = 0.0, 0
        for g in _groups_by_length(samples):
            x, u = self._stack(g)
            r = koopman_rollout_batch(params, x[:, 0, :], u) - x
            sq += float(np.dot(r.ravel(), r.ravel()))
            count += r.size
        return sq / count
