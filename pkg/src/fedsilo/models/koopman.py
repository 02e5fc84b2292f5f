"""Wiener-type Koopman model: MLP encoder, linear latent dynamics, MLP decoder.

    z_0 = enc(x_0),  z_{t+1} = A z_t + B u_t,  x_hat_t = dec(z_t)

Multistep prediction consumes only ``x_0`` and the input sequence. Arrays
are column-oriented here (features x samples), so weights are ``(out, in)``
and biases ``(out, 1)``.
"""
from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .. import numcore as nc
from ..numcore import NumericError, ParameterVector


def _mlp(p: Mapping, prefix: str, h, out_act):
    n = 0
    while f"{prefix}.l{n}.w" in p:
        n += 1
    for k in range(n):
        h = nc.add(nc.matmul(p[f"{prefix}.l{k}.w"], h), p[f"{prefix}.l{k}.b"])
        h = nc.tanh(h) if k < n - 1 else out_act(h)
    return h


def encode(p: Mapping, x):
    """``x`` is ``(10, n)``; returns ``(latent, n)``."""
    return _mlp(p, "enc", x, nc.identity)


def decode(p: Mapping, z):
    return _mlp(p, "dec", z, nc.sigmoid)


def rollout_latent(p: Mapping, x0, u_seq: np.ndarray) -> list:
    """Latent states ``z_0 .. z_{p-1}``, each ``(latent, batch)``.

    ``x0`` is ``(10, batch)``; ``u_seq`` is ``(p, 2, batch)``.
    """
    z = encode(p, x0)
    zs = [z]
    for t in range(u_seq.shape[0] - 1):
        z = nc.add(nc.matmul(p["lin.A"], z), nc.matmul(p["lin.B"], u_seq[t]))
        zs.append(z)
    return zs


def trajectory_loss_fn(p: Mapping, states: np.ndarray, inputs: np.ndarray, lambda_rec: float = 1.0):
    """Prediction + reconstruction MSE for a batch of equal-length trajectories.

    ``states`` is ``(batch, p, 10)`` and ``inputs`` ``(batch, p, 2)``, both scaled.
    """
    b, steps, d = states.shape
    u = np.ascontiguousarray(inputs.transpose(1, 2, 0))
    x0 = np.ascontiguousarray(states[:, 0, :].T)
    # time-major columns: column t*b + k is trajectory k at step t
    target = np.ascontiguousarray(states.transpose(2, 1, 0).reshape(d, steps * b))
    z = nc.linear_recurrence(p["lin.A"], p["lin.B"], encode(p, x0), u)
    pred = decode(p, z)
    loss = nc.mse(pred, target)
    if lambda_rec:
        rec = decode(p, encode(p, target))
        loss = nc.add(loss, nc.scale(nc.mse(rec, target), lambda_rec))
    return loss


def koopman_rollout(params: ParameterVector, x0, u_seq) -> np.ndarray:
    """Open-loop prediction ``(p, 10)`` from ``x0`` (10,) and ``u_seq`` (p, 2)."""
    p = dict(params.items())
    u = np.asarray(u_seq, dtype=np.float64)
    steps = u.shape[0]
    z = np.asarray(encode(p, np.asarray(x0, dtype=np.float64).reshape(-1, 1)))
    a, bm = p["lin.A"], p["lin.B"]
    zs = np.empty((z.shape[0], steps))
    for t in range(steps):
        if not np.isfinite(z).all():
            raise NumericError(f"rollout diverged at step {t}", t)
        zs[:, t] = z[:, 0]
        if t + 1 < steps:
            z = a @ z + bm @ u[t].reshape(-1, 1)
    out = np.asarray(decode(p, zs))
    if not np.isfinite(out).all():
        raise NumericError("decoder produced non-finite output")
    return out.T


def koopman_rollout_batch(params: ParameterVector, x0: np.ndarray, u_seq: np.ndarray) -> np.ndarray:
    """Vectorised rollout: ``x0`` (batch, 10), ``u_seq`` (batch, p, 2) -> (batch, p, 10)."""
    p = dict(params.items())
    b, steps, _ = u_seq.shape
    u = u_seq.transpose(1, 2, 0)
    z = np.asarray(encode(p, np.ascontiguousarray(x0.T)))
    zs = np.empty((steps, z.shape[0], b))
    for t in range(steps):
        if not np.isfinite(z).all():
            raise NumericError(f"rollout diverged at step {t}", t)
        zs[t] = z
        if t + 1 < steps:
            z = p["lin.A"] @ z + p["lin.B"] @ u[t]
    flat = np.asarray(decode(p, zs.transpose(1, 0, 2).reshape(z.shape[0], steps * b)))
    return flat.reshape(-1, steps, b).transpose(2, 1, 0)


def loss_trajectory(params: ParameterVector, trajectory, lambda_rec: float = 1.0) -> float:
    """Loss of one scaled trajectory (object with ``states`` and ``inputs``)."""
    states = np.asarray(trajectory.states, dtype=np.float64)[None]
    inputs = np.asarray(trajectory.inputs, dtype=np.float64)[None]
    return float(np.asarray(trajectory_loss_fn(dict(params.items()), states, inputs, lambda_rec)).reshape(()))
