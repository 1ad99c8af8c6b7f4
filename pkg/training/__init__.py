"""Обучение с согласованностью на виртуально-адверсариальных заменах токенов."""

from .models import (
    TSA_SCHEDULES,
    MetricsLog,
    MetricsRecord,
    TrainingConfig,
    TrainingDivergedError,
    TrainState,
)
from .losses import (
    BatchLoss,
    consistency_batch_loss,
    consistency_loss,
    supervised_loss_with_tsa,
    tsa_threshold,
)
from .loop import BatchCycler, evaluate, train

__all__ = [
    "TSA_SCHEDULES",
    "MetricsLog",
    "MetricsRecord",
    "TrainingConfig",
    "TrainingDivergedError",
    "TrainState",
    "BatchLoss",
    "consistency_batch_loss",
    "consistency_loss",
    "supervised_loss_with_tsa",
    "tsa_threshold",
    "BatchCycler",
    "evaluate",
    "train",
]
