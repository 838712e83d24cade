"""
Run configuration for the command line: JSON files plus flag overrides.

A run file bundles the model, training and data settings of one command::

    {"model": {"horizon": 24}, "train": {"max_epochs": 30}, "data": {"stride": 2}}

Missing sections and keys take the library defaults.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, TypeVar

from pydantic import BaseModel, ConfigDict, Field, model_validator

from prism.errors import ConfigError, ConfigParseError
from prism.model import PrismConfig
from prism.training import TrainConfig

ModelT = TypeVar("ModelT", bound=BaseModel)


class DataConfig(BaseModel):
    """
    How a series is cut into supervised windows.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    stride: int = Field(default=1, ge=1)
    split: tuple[float, float, float] = (0.7, 0.15, 0.15)
    series_key: str | None = Field(default=None, description="Selector applied to multi-series files")

    @model_validator(mode="after")
    def _check(self) -> DataConfig:
        if any(part < 0 for part in self.split) or abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must be >= 0 and sum to 1, got {self.split}")
        return self


class RunConfig(BaseModel):
    """
    Everything a train / evaluate / ablate command needs besides its input files.

    ``seed`` initializes the model and drives batch order and dropout; it
    replaces ``train.seed``. ``seeds`` is the seed list of an ablation.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: PrismConfig = Field(default_factory=PrismConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    precision: Literal[32, 64] = 32
    seed: int = Field(default=0, ge=0)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    workers: int | None = Field(default=None, ge=1)

    @property
    def train_config(self) -> TrainConfig:
        return self.train.model_copy(update={"seed": self.seed})


def read_json(path: Path | str) -> dict:
    """
    Parse a JSON object from ``path``, reporting syntax errors with line and column.
    """
    source = Path(path)
    text = source.read_text(encoding="utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(str(source), exc.lineno, exc.colno, exc.msg) from exc
    if not isinstance(document, dict):
        raise ConfigParseError(str(source), 1, 1, "expected a JSON object at the top level")
    return document


def _merge(base: dict, overrides: dict) -> dict:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    model_cls: type[ModelT],
    path: Path | str | None,
    overrides: dict | None = None,
    base: dict | None = None,
) -> ModelT:
    """
    Validate ``model_cls`` from an optional JSON file with flag values layered on top.

    ``overrides`` may be nested (``{"train": {"max_epochs": 3}}``); keys whose
    value is None are ignored so unset flags keep the file's value. Without a
    file, ``base`` (a previously resolved config) is the starting document.
    """
    document = read_json(path) if path is not None else dict(base or {})
    return model_cls.model_validate(_merge(document, _drop_unset(overrides or {})))


def _drop_unset(overrides: dict) -> dict:
    cleaned = {}
    for key, value in overrides.items():
        if isinstance(value, dict):
            nested = _drop_unset(value)
            if nested:
                cleaned[key] = nested
        elif value is not None:
            cleaned[key] = value
    return cleaned
