"""Local training: shuffled mini-batch descent with lr decay and early stopping."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..data.partition import ClientDataset, _rng
from ..numcore import NumericError, ParameterVector, param_axpy
from .config import FederationConfig

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class TrainingError(RuntimeError):
    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None):
        where = "" if epoch is None else f" (epoch {epoch}" + ("" if batch is None else f", batch {batch}") + ")"
        super().__init__(message + where)
        self.epoch = epoch
        self.batch = batch


@dataclass
class LocalMetrics:
    epochs_run: int
    best_epoch: int  # -1 means the incoming parameters were never beaten
    best_val_loss: float
    initial_val_loss: float
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)


class _Adam:
    """Elementwise Adam on the flattened parameter vector."""

    def __init__(self, like: ParameterVector):
        self.m = np.zeros(like.total_len)
        self.v = np.zeros(like.total_len)
        self.t = 0

    def step(self, w: ParameterVector, g: ParameterVector, lr: float) -> ParameterVector:
        b1, b2 = ADAM_BETAS
        self.t += 1
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        gf = g.flat()
        self.m = b1 * self.m + (1.0 - b1) * gf
        self.v = b2 * self.v + (1.0 - b2) * gf * gf
        return w.from_flat(w.flat() - lr * (self.m / c1) / (np.sqrt(self.v / c2) + ADAM_EPS))


def _shuffle_rng(seed: int, stream: int, round_index: int, epoch: int) -> np.random.Generator:
    return _rng(seed, 0x7A1, stream, round_index, epoch)


def local_train(w_in: ParameterVector, client: ClientDataset, config: FederationConfig, task, *,
                round_index: int = 1, epochs: int | None = None,
                stream: int | None = None) -> tuple[ParameterVector, LocalMetrics]:
    """Train ``w_in`` on the client's train split and return the best-validation parameters.

    The learning-rate schedule, optimizer state and early-stopping counter start
    fresh on every call. ``stream`` keys the shuffle RNG (defaults to the
    client id); ``epochs`` overrides ``config.local_epochs``.
    """
    n_epochs = config.local_epochs if epochs is None else epochs
    train = client.train
    if not train:
        raise TrainingError(f"client {client.client_id} has no training samples")
    val = client.val or train
    stream = client.client_id if stream is None else stream

    best_w = w = w_in
    best_val = initial = task.val_loss(w_in, val)
    if not math.isfinite(best_val):
        raise TrainingError(f"client {client.client_id}: non-finite validation loss before training", 0)
    metrics = LocalMetrics(0, -1, best_val, initial)
    opt = _Adam(w_in) if config.optimizer == "adam" else None
    bad = 0
    bs = config.batch_size
    for epoch in range(n_epochs):
        lr = config.lr_at(epoch)
        order = _shuffle_rng(config.seed, stream, round_index, epoch).permutation(len(train))
        ep_loss = 0.0
        for b, start in enumerate(range(0, len(train), bs)):
            batch = [train[i] for i in order[start:start + bs]]
            try:
                loss, grad = task.loss_grad(w, batch)
            except NumericError as exc:
                raise TrainingError(f"client {client.client_id}: {exc}", epoch, b) from exc
            if not math.isfinite(loss):
                raise TrainingError(f"client {client.client_id}: non-finite loss", epoch, b)
            w = opt.step(w, grad, lr) if opt else param_axpy(-lr, grad, w)
            ep_loss += loss * len(batch)
        metrics.train_losses.append(ep_loss / len(train))
        try:
            v = task.val_loss(w, val)
        except NumericError as exc:
            raise TrainingError(f"client {client.client_id}: validation {exc}", epoch) from exc
        if not math.isfinite(v):
            raise TrainingError(f"client {client.client_id}: non-finite validation loss", epoch)
        metrics.val_losses.append(v)
        metrics.epochs_run = epoch + 1
        if v <= best_val - config.min_improvement:
            best_val, best_w, bad = v, w, 0
            metrics.best_epoch = epoch
        else:
            bad += 1
            if bad >= config.early_stop_patience:
                break
    metrics.best_val_loss = best_val
    return best_w, metrics
