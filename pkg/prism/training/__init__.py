"""
Composite objective, Adam and the resumable training loop.
"""

from prism.training.config import TrainConfig
from prism.training.loop import (
    HISTORY_COLUMNS,
    History,
    Trainer,
    TrainResult,
    evaluate_loss,
    normalized_targets,
    train,
)
from prism.training.losses import forecast_loss, total_loss
from prism.training.optim import Adam
from prism.training.state import TrainState

__all__ = [
    "HISTORY_COLUMNS",
    "Adam",
    "History",
    "TrainConfig",
    "TrainResult",
    "TrainState",
    "Trainer",
    "evaluate_loss",
    "forecast_loss",
    "normalized_targets",
    "total_loss",
    "train",
]
