"""
Model hyperparameters and the ablation variants built from them.
"""

from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from prism.errors import ConfigError

# Ablation variant names, in report order.
FULL = "full"
WO_PATCH = "w/o-patch"
WO_PRIMITIVE = "w/o-primitive"
WO_SPECTRAL = "w/o-spectral"
WO_PRIM_SPEC = "w/o-prim-spec"
BASELINE = "baseline"
VARIANTS = (FULL, WO_PATCH, WO_PRIMITIVE, WO_SPECTRAL, WO_PRIM_SPEC, BASELINE)

_VARIANT_FLAGS: dict[str, dict[str, bool]] = {
    FULL: {},
    WO_PATCH: {"use_patch": False},
    WO_PRIMITIVE: {"use_primitive": False},
    WO_SPECTRAL: {"use_spectral": False},
    WO_PRIM_SPEC: {"use_primitive": False, "use_spectral": False},
    BASELINE: {"use_patch": False, "use_primitive": False, "use_spectral": False},
}


class PrismConfig(BaseModel):
    """
    Architecture of one forecaster.

    With ``use_patch=False`` the model tokenizes pointwise (P = S = 1, so
    N_p = L) regardless of ``patch_len`` / ``patch_stride``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    lookback: int = Field(default=96, ge=1, description="L, history length")
    horizon: int = Field(default=24, ge=1, description="H, forecast length")
    patch_len: int = Field(default=16, ge=1, description="P")
    patch_stride: int = Field(default=8, ge=1, description="S")
    d_model: int = Field(default=64, ge=1, description="D")
    n_layers: int = Field(default=2, ge=1, description="N")
    n_heads: int = Field(default=4, ge=1, description="N_H")
    n_primitives: int = Field(default=8, description="K, dictionary size")
    cutoff_bins: int | None = Field(default=None, description="c; None picks max(1, ceil(F/4))")
    eps: float = Field(default=1e-5, gt=0)
    dropout: float = 0.1
    use_patch: bool = True
    use_primitive: bool = True
    use_spectral: bool = True

    @model_validator(mode="after")
    def _check(self) -> PrismConfig:
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.patch > self.lookback:
            raise ConfigError(f"patch length P={self.patch} exceeds lookback L={self.lookback}")
        if (self.lookback - self.patch) % self.stride != 0:
            raise ConfigError(
                f"(L - P) must be a multiple of S: "
                f"L={self.lookback}, P={self.patch}, S={self.stride}"
            )
        if self.d_model % self.n_heads != 0:
            raise ConfigError(f"D={self.d_model} is not divisible by N_H={self.n_heads}")
        if self.n_primitives < 2:
            raise ConfigError(
                f"K={self.n_primitives}: at least 2 primitives are needed for the diversity loss"
            )
        if self.use_spectral:
            if self.n_patches < 2:
                raise ConfigError("spectral refinement needs N_p >= 2 (no spectrum to split)")
            if not 1 <= self.cutoff < self.n_bins:
                raise ConfigError(f"cutoff c={self.cutoff} must satisfy 1 <= c < F={self.n_bins}")
        return self

    @property
    def patch(self) -> int:
        return self.patch_len if self.use_patch else 1

    @property
    def stride(self) -> int:
        return self.patch_stride if self.use_patch else 1

    @property
    def n_patches(self) -> int:
        return (self.lookback - self.patch) // self.stride + 1

    @property
    def n_bins(self) -> int:
        return self.n_patches // 2 + 1

    @property
    def cutoff(self) -> int:
        if self.cutoff_bins is not None:
            return self.cutoff_bins
        return max(1, math.ceil(self.n_bins / 4))

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def variant(self, name: str) -> PrismConfig:
        """
        This config with the ablation switches of variant ``name``.
        """
        if name not in _VARIANT_FLAGS:
            raise ConfigError(f"unknown variant {name!r}; expected one of {', '.join(VARIANTS)}")
        flags = _VARIANT_FLAGS[name]
        update = dict(flags)
        # A fixed cutoff may not fit the pointwise spectrum; let it re-derive.
        if not flags.get("use_patch", True):
            update["cutoff_bins"] = None
        return PrismConfig.model_validate({**self.model_dump(), **update})
