"""
Optimization settings for one training run.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from prism.errors import ConfigError


class TrainConfig(BaseModel):
    """
    Loss weights, optimizer and schedule of a run.

    ``l1_weight`` and ``diversity_weight`` are λ1 and λ_div of the composite
    objective ``MSE + λ1·MAE + λ_div·Σ_layers L_div``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    l1_weight: float = 0.5
    diversity_weight: float = 0.01
    lr: float = 1e-3
    batch_size: int = Field(default=32, ge=1)
    max_epochs: int = Field(default=50, ge=1)
    patience: int = 5
    grad_clip: float | None = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    cosine_schedule: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> TrainConfig:
        if self.l1_weight < 0 or self.diversity_weight < 0:
            raise ConfigError(
                f"loss weights must be >= 0, got λ1={self.l1_weight}, "
                f"λ_div={self.diversity_weight}"
            )
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ConfigError(f"grad_clip must be > 0 or null, got {self.grad_clip}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError(f"Adam betas must lie in [0, 1), got ({self.beta1}, {self.beta2})")
        return self
