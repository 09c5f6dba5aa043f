"""Koopman autoencoder: model, five-term loss, training and warm starts."""

from .homotopy import HOMOTOPY_COLUMNS, HomotopyRow, homotopy_chain
from .losses import LOSS_FIELDS, LossReport, LossWeights, choose_starts, compute_losses
from .model import KoopmanModel, ModelArch, checkpoint_extra, warm_start
from .train import EpochMetrics, TrainConfig, TrainResult, evaluate, train, write_metrics

__all__ = [
    "EpochMetrics",
    "HOMOTOPY_COLUMNS",
    "HomotopyRow",
    "KoopmanModel",
    "LOSS_FIELDS",
    "LossReport",
    "LossWeights",
    "ModelArch",
    "TrainConfig",
    "TrainResult",
    "checkpoint_extra",
    "choose_starts",
    "compute_losses",
    "evaluate",
    "homotopy_chain",
    "train",
    "warm_start",
    "write_metrics",
]
