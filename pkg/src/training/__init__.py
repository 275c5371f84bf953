"""训练：损失函数与训练循环"""

from src.training.losses import (
    LossParts,
    soft_c_index,
    total_loss,
    trajectory_likelihood_loss,
    trajectory_rank_loss,
    wae_loss,
)
from src.training.trainer import EpochLogWriter, TrainingData, fit, run_task

__all__ = [
    "EpochLogWriter",
    "LossParts",
    "TrainingData",
    "fit",
    "run_task",
    "soft_c_index",
    "total_loss",
    "trajectory_likelihood_loss",
    "trajectory_rank_loss",
    "wae_loss",
]
