"""
The training loop: seeded mini-batches, composite loss, Adam, per-epoch
validation, early stopping, best-checkpoint retention and resumable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from prism.errors import DimensionError, NumericError, SizingError
from prism.model import PrismModel, save_checkpoint
from prism.numcore import no_grad
from prism.traces.windows import WindowBatch, WindowSplits
from prism.training.config import TrainConfig
from prism.training.losses import forecast_loss, total_loss
from prism.training.optim import Adam
from prism.training.state import TrainState
from prism.utils.io import atomic_to_csv
from prism.utils.logger import get_logger, log_safe

logger = get_logger(__name__)

HISTORY_COLUMNS = ["epoch", "train_loss", "val_loss", "val_mse", "val_mae", "mean_div_loss"]
EVAL_CHUNK = 256


@dataclass
class History:
    """
    One row per completed epoch. ``div_per_layer`` keeps the per-layer mean
    diversity loss behind ``mean_div_loss``.
    """

    rows: list[dict] = field(default_factory=list)
    stopped_early: bool = False

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=HISTORY_COLUMNS)

    def column(self, name: str) -> list[float]:
        return [row[name] for row in self.rows]

    def write_csv(self, path: Path | str) -> Path:
        return atomic_to_csv(self.to_frame(), path, index=False, float_format="%.10g")


@dataclass
class StepOutcome:
    loss: float
    forecast_loss: float
    diversity: list[float]
    grad_norm: float


@dataclass
class TrainResult:
    model: PrismModel
    history: History
    state: TrainState


@dataclass
class _Best:
    loss: float
    epoch: int
    bad_epochs: int
    params: dict[str, np.ndarray]


def normalized_targets(batch_y: np.ndarray, mu: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """
    Targets on the scale of the history's instance normalization.
    """
    return (batch_y - mu.reshape(-1, 1)) / scale.reshape(-1, 1)


class Trainer:
    """
    Owns the optimizer and the sampling RNG of one model's training run.
    """

    def __init__(self, model: PrismModel, config: TrainConfig) -> None:
        self.model = model
        self.config = config
        self.optimizer = Adam(
            model.params,
            lr=config.lr,
            betas=(config.beta1, config.beta2),
            eps=config.adam_eps,
            grad_clip=config.grad_clip,
        )
        self.rng = np.random.default_rng(config.seed)
        self.step_count = 0
        self.epoch = 0

    def learning_rate(self, epoch: int) -> float:
        if not self.config.cosine_schedule:
            return self.config.lr
        return 0.5 * self.config.lr * (1.0 + math.cos(math.pi * epoch / self.config.max_epochs))

    def step(self, batch: WindowBatch, lr: float | None = None) -> StepOutcome:
        """
        One forward/backward/update on ``batch``; dropout draws from the run RNG.
        """
        model = self.model
        model.zero_grad()
        result = model.forward(batch.X, batch.stamps, training=True, rng=self.rng)
        targets = normalized_targets(batch.Y, result.stats.mu.data, result.stats.scale.data)
        pre = forecast_loss(result.normalized, targets, self.config.l1_weight)
        loss = total_loss(pre, result.diversity_losses, self.config.diversity_weight)
        value = loss.item()
        self.step_count += 1
        if not math.isfinite(value):
            raise NumericError(
                f"training loss became {value} at epoch {self.epoch + 1}, step {self.step_count}"
            )
        loss.backward()
        norm = self.optimizer.step(lr)
        return StepOutcome(value, pre.item(), [d.item() for d in result.diversity_losses], norm)

    def run_epoch(self, windows: WindowBatch, epoch: int) -> tuple[float, list[float]]:
        """
        Sample ``windows`` without replacement in seeded order; returns the
        mean training loss and per-layer mean diversity loss.
        """
        self.epoch = epoch
        order = self.rng.permutation(len(windows))
        size = self.config.batch_size
        losses: list[float] = []
        diversity: list[list[float]] = []
        lr = self.learning_rate(epoch)
        for begin in range(0, len(order), size):
            outcome = self.step(windows.subset(order[begin : begin + size]), lr)
            losses.append(outcome.loss)
            diversity.append(outcome.diversity)
        per_layer = np.mean(diversity, axis=0).tolist() if diversity and diversity[0] else []
        return float(np.mean(losses)), per_layer

    def snapshot(self, epoch: int, best: _Best, history: History) -> TrainState:
        return TrainState(
            epoch=epoch,
            step=self.step_count,
            adam_t=self.optimizer.t,
            best_val_loss=best.loss,
            best_epoch=best.epoch,
            bad_epochs=best.bad_epochs,
            rng_state=self.rng.bit_generator.state,
            params=self.model.state_arrays(),
            moments=self.optimizer.state_arrays(),
            best_params=best.params,
            history=[dict(row) for row in history.rows],
            bits=self.model.bits,
        )

    def restore(self, state: TrainState) -> None:
        if state.bits != self.model.bits:
            raise DimensionError(
                f"state was saved at {state.bits}-bit, model is {self.model.bits}-bit"
            )
        self.model.load_state_arrays(state.params)
        self.optimizer.load_state_arrays(state.moments, state.adam_t)
        self.rng.bit_generator.state = state.rng_state
        self.step_count = state.step


def evaluate_loss(model: PrismModel, windows: WindowBatch, l1_weight: float) -> dict[str, float]:
    """
    Forecast loss on the normalized scale plus raw-scale MSE/MAE, over all windows.
    """
    sq_norm = abs_norm = sq_raw = abs_raw = 0.0
    count = 0
    with no_grad():
        for begin in range(0, len(windows), EVAL_CHUNK):
            chunk = windows.subset(np.arange(begin, min(begin + EVAL_CHUNK, len(windows))))
            result = model.forward(chunk.X, chunk.stamps)
            stats = result.stats
            targets = normalized_targets(chunk.Y, stats.mu.data, stats.scale.data)
            diff_norm = result.normalized.data.astype(np.float64) - targets
            diff_raw = result.prediction.data.astype(np.float64) - chunk.Y
            sq_norm += float(np.sum(diff_norm**2))
            abs_norm += float(np.sum(np.abs(diff_norm)))
            sq_raw += float(np.sum(diff_raw**2))
            abs_raw += float(np.sum(np.abs(diff_raw)))
            count += diff_raw.size
    return {
        "val_loss": sq_norm / count + l1_weight * abs_norm / count,
        "val_mse": sq_raw / count,
        "val_mae": abs_raw / count,
    }


def _check_windows(model: PrismModel, splits: WindowSplits) -> None:
    if len(splits.train) == 0 or len(splits.val) == 0:
        raise SizingError(
            f"training needs non-empty train and val splits, got {len(splits.train)} and "
            f"{len(splits.val)} windows"
        )
    cfg = model.config
    if splits.train.lookback != cfg.lookback or splits.train.horizon != cfg.horizon:
        raise DimensionError(
            f"windows are L={splits.train.lookback}, H={splits.train.horizon}; "
            f"model expects L={cfg.lookback}, H={cfg.horizon}"
        )


def train(
    model: PrismModel,
    splits: WindowSplits,
    config: TrainConfig,
    *,
    state: TrainState | None = None,
    output_dir: Path | str | None = None,
) -> TrainResult:
    """
    Train ``model`` in place and leave it holding the best-validation parameters.

    With ``state`` the run continues after ``state.epoch`` epochs exactly as if
    it had never stopped. With ``output_dir`` the best checkpoint
    (``best/``), the resumable state (``state/``) and ``history.csv`` are
    rewritten after every epoch.
    """
    _check_windows(model, splits)
    trainer = Trainer(model, config)
    history = History()
    best = _Best(math.inf, 0, 0, model.state_arrays())
    start = 0
    if state is not None:
        trainer.restore(state)
        history.rows = [dict(row) for row in state.history]
        best = _Best(state.best_val_loss, state.best_epoch, state.bad_epochs, state.best_params)
        start = state.epoch
        logger.info("Resuming training after epoch %d", start)
    out = Path(output_dir) if output_dir is not None else None

    snapshot = trainer.snapshot(start, best, history)
    for epoch in range(start, config.max_epochs):
        if best.bad_epochs >= config.patience:
            break
        train_loss, per_layer = trainer.run_epoch(splits.train, epoch)
        scores = evaluate_loss(model, splits.val, config.l1_weight)
        if not math.isfinite(scores["val_loss"]):
            raise NumericError(
                f"validation loss became {scores['val_loss']} after epoch {epoch + 1}"
            )
        row = {
            "epoch": epoch + 1,
            "train_loss": train_loss,
            **scores,
            "mean_div_loss": float(np.mean(per_layer)) if per_layer else 0.0,
            "div_per_layer": per_layer,
        }
        history.rows.append(row)
        logger.progress(
            "epoch %d/%d  train %.5f  val %.5f  div %.4f",
            epoch + 1,
            config.max_epochs,
            train_loss,
            scores["val_loss"],
            row["mean_div_loss"],
        )

        if scores["val_loss"] < best.loss:
            best = _Best(scores["val_loss"], epoch + 1, 0, model.state_arrays())
            if out is not None:
                save_checkpoint(model, out / "best", extra={"epoch": epoch + 1, **scores})
                logger.success(
                    "Best checkpoint (epoch %d) saved to %s", epoch + 1, log_safe(out / "best")
                )
        else:
            best.bad_epochs += 1

        snapshot = trainer.snapshot(epoch + 1, best, history)
        if out is not None:
            snapshot.save(out / "state")
            history.write_csv(out / "history.csv")

    if best.bad_epochs >= config.patience:
        history.stopped_early = True
        logger.warning(
            "Early stop: no validation improvement for %d epochs (best epoch %d)",
            best.bad_epochs,
            best.epoch,
        )
    model.load_state_arrays(best.params)
    return TrainResult(model, history, snapshot)
