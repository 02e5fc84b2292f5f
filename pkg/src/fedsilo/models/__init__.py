"""Trainable model families and their losses."""
from .gnn import (GraphBatch, activity_loss_fn, gnn_forward, gnn_predict, gnn_predict_batch,
                  loss_activity)
from .koopman import (decode, encode, koopman_rollout, koopman_rollout_batch, loss_trajectory,
                      trajectory_loss_fn)
from .spec import GNN_MIXTURE, KOOPMAN_WIENER, ModelSpec, init_model

__all__ = [
    "GNN_MIXTURE",
    "GraphBatch",
    "KOOPMAN_WIENER",
    "ModelSpec",
    "activity_loss_fn",
    "decode",
    "encode",
    "gnn_forward",
    "gnn_predict",
    "gnn_predict_batch",
    "init_model",
    "koopman_rollout",
    "koopman_rollout_batch",
    "loss_activity",
    "loss_trajectory",
    "trajectory_loss_fn",
]
