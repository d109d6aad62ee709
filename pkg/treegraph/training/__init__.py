"""Weighted-loss training, optimization and the metric suite."""

from .loss import weighted_cross_entropy
from .metrics import (
    cohen_kappa,
    confusion_matrix,
    evaluate,
    format_confusion_csv,
    metrics_from_confusion,
)
from .optim import Adam, AdamState, adam_step, cosine_lr
from .trainer import EPOCH_CSV_HEADER, EPOCH_CSV_NAME, TrainResult, read_epoch_csv, train

__all__ = [
    "weighted_cross_entropy",
    "cohen_kappa",
    "confusion_matrix",
    "evaluate",
    "format_confusion_csv",
    "metrics_from_confusion",
    "Adam",
    "AdamState",
    "adam_step",
    "cosine_lr",
    "EPOCH_CSV_HEADER",
    "EPOCH_CSV_NAME",
    "TrainResult",
    "read_epoch_csv",
    "train",
]
