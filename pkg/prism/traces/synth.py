"""
Synthetic heterogeneous GPU workload.

Demand is the sum of tenant archetypes, each a diurnal bump (a wrapped
Gaussian around the tenant's peak hour on top of a floor) scaled by a shared
weekly profile, plus heavy-tailed bursts that decay exponentially. The sum is
then perturbed by multiplicative noise and clipped at zero:

    value(t) = max(0, 1 + noise·z_t) · (Σ_k base_k · diurnal_k(hour) · weekly(dow) + bursts(t))

Every random draw comes from one ``numpy.random.Generator`` seeded by
``SynthConfig.seed``, in a fixed order, so equal configs give byte-identical
series.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import UTC, datetime
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from prism.errors import ConfigError
from prism.traces.records import Priority, TraceRecord
from prism.traces.series import DemandSeries, to_utc
from prism.utils.logger import get_logger

logger = get_logger(__name__)

MIN_HORIZON_DAYS = 14


class TenantArchetype(BaseModel):
    """
    One tenant's daily demand shape.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    org: str = Field(pattern=r"^[A-Za-z0-9_.\-]{1,64}$")
    priority: Literal["HP", "Spot"] = "HP"
    base: float = Field(default=30.0, description="GPUs at the daily peak")
    peak_hour: float = Field(default=12.0, ge=0.0, lt=24.0)
    peak_width: float = Field(default=3.0, description="Std-dev of the diurnal bump, hours")
    floor: float = Field(default=0.05, description="Fraction of base held at the trough")

    def diurnal(self, hours: np.ndarray) -> np.ndarray:
        """
        Diurnal multiplier in ``[floor, 1]`` for fractional hours of day.
        """
        distance = np.abs(hours - self.peak_hour) % 24.0
        distance = np.minimum(distance, 24.0 - distance)
        bump = np.exp(-0.5 * (distance / self.peak_width) ** 2)
        return self.floor + (1.0 - self.floor) * bump


def default_tenants() -> list[TenantArchetype]:
    """
    Morning and afternoon HP organisations plus an overnight Spot batch tenant.
    """
    return [
        TenantArchetype(org="org-morning", priority="HP", base=40.0, peak_hour=9.0, peak_width=3.0),
        TenantArchetype(org="org-afternoon", priority="HP", base=35.0, peak_hour=15.0, peak_width=3.0),
        TenantArchetype(org="org-night", priority="Spot", base=12.0, peak_hour=3.0, peak_width=4.0),
    ]


class SynthConfig(BaseModel):
    """
    Generator settings. Unspecified keys take the defaults below.

    ``weekly_profile`` is indexed Monday..Sunday; the default dips on Friday
    and rebounds over the weekend.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    tenants: list[TenantArchetype] = Field(default_factory=default_tenants)
    n_tenants: int | None = None
    weekly_profile: tuple[float, float, float, float, float, float, float] = (
        1.0,
        1.05,
        1.05,
        1.0,
        0.7,
        0.85,
        0.95,
    )
    burst_rate: float = Field(default=0.25, description="Bursts per day")
    burst_tail: float = Field(default=1.5, description="Pareto tail exponent of burst magnitude")
    burst_scale: float = Field(default=0.12, description="Burst size as a fraction of summed tenant base")
    burst_cap: float = Field(default=5.0, description="Cap on the Pareto magnitude multiplier")
    burst_decay_hours: float = 3.0
    burst_org: str = Field(default="bursts", pattern=r"^[A-Za-z0-9_.\-]{1,64}$")
    noise: float = Field(default=0.05, description="Std-dev of multiplicative noise")
    horizon_days: int = 184
    bucket_hours: float = 1.0
    start: datetime = datetime(2024, 4, 1, tzinfo=UTC)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _expand_tenants(cls, data: object) -> object:
        """
        A bare ``n_tenants`` cycles the default archetypes to that many tenants.
        """
        if isinstance(data, dict) and "tenants" not in data and isinstance(data.get("n_tenants"), int):
            if data["n_tenants"] < 1:
                raise ConfigError("n_tenants must be >= 1")
            return {**data, "tenants": _cycle_archetypes(data["n_tenants"])}
        return data

    @model_validator(mode="after")
    def _check(self) -> SynthConfig:
        if self.horizon_days < MIN_HORIZON_DAYS:
            raise ConfigError(
                f"horizon_days={self.horizon_days} is too short; at least {MIN_HORIZON_DAYS} days "
                "are needed to express weekly cycles"
            )
        rates = {
            "burst_rate": self.burst_rate,
            "burst_scale": self.burst_scale,
            "noise": self.noise,
        }
        negative = [name for name, value in rates.items() if value < 0]
        if negative:
            raise ConfigError(f"rates must be >= 0: {', '.join(negative)}")
        if any(w <= 0 for w in self.weekly_profile):
            raise ConfigError("weekly_profile weights must all be > 0")
        if self.burst_tail <= 0 or self.burst_cap < 1 or self.burst_decay_hours <= 0:
            raise ConfigError("burst_tail and burst_decay_hours must be > 0 and burst_cap >= 1")
        if not 0 < self.bucket_hours <= 24:
            raise ConfigError(f"bucket_hours must lie in (0, 24], got {self.bucket_hours}")
        for tenant in self.tenants:
            if tenant.base < 0 or tenant.peak_width <= 0 or not 0 <= tenant.floor <= 1:
                raise ConfigError(f"tenant {tenant.org}: base >= 0, peak_width > 0 and floor in [0, 1] required")
        if not self.tenants:
            raise ConfigError("at least one tenant is required")
        orgs = [t.org for t in self.tenants] + [self.burst_org]
        if len(set(orgs)) != len(orgs):
            raise ConfigError("tenant orgs and burst_org must be distinct")
        if self.n_tenants is not None and self.n_tenants != len(self.tenants):
            raise ConfigError(f"n_tenants={self.n_tenants} but {len(self.tenants)} tenants are listed")
        return self

    @property
    def tenant_count(self) -> int:
        return len(self.tenants)

    @property
    def bucket_width(self) -> pd.Timedelta:
        return pd.Timedelta(hours=self.bucket_hours)

    @property
    def buckets(self) -> int:
        return int(round(self.horizon_days * 24 / self.bucket_hours))


def _cycle_archetypes(count: int) -> list[TenantArchetype]:
    """
    ``count`` tenants cycling the default archetypes, peaks shifted per lap.
    """
    base = default_tenants()
    tenants = []
    for i in range(count):
        proto = base[i % len(base)]
        lap = i // len(base)
        tenants.append(
            proto.model_copy(
                update={"org": f"{proto.org}-{i + 1}", "peak_hour": (proto.peak_hour + 2.0 * lap) % 24.0}
            )
        )
    return tenants


@dataclass(frozen=True, eq=False)
class SynthComponents:
    """
    The generator's building blocks, bucket-aligned.

    ``tenants`` and ``bursts`` are noise-free; ``gain`` is the clipped
    multiplicative noise factor, so ``total = gain · (Σ tenants + bursts)``.
    """

    start: pd.Timestamp
    bucket_width: pd.Timedelta
    tenants: dict[str, np.ndarray]
    bursts: np.ndarray
    gain: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.gain * (sum(self.tenants.values()) + self.bursts)


def _burst_train(cfg: SynthConfig, rng: np.random.Generator, buckets: int) -> np.ndarray:
    """
    Poisson-timed bursts with Pareto magnitudes and exponential decay.
    """
    bursts = np.zeros(buckets)
    count = int(rng.poisson(cfg.burst_rate * cfg.horizon_days))
    onsets = np.sort(rng.integers(0, buckets, size=count))
    multipliers = np.minimum(1.0 + rng.pareto(cfg.burst_tail, size=count), cfg.burst_cap)
    amplitude = cfg.burst_scale * sum(t.base for t in cfg.tenants)
    decay_buckets = cfg.burst_decay_hours / cfg.bucket_hours
    positions = np.arange(buckets)
    for onset, multiplier in zip(onsets, multipliers, strict=True):
        tail = positions[onset:] - onset
        bursts[onset:] += amplitude * multiplier * np.exp(-tail / decay_buckets)
    return bursts


def synthesize_components(cfg: SynthConfig) -> SynthComponents:
    """
    Draw every component of a synthetic workload.
    """
    buckets = cfg.buckets
    start = to_utc(cfg.start)
    times = pd.date_range(start, periods=buckets, freq=cfg.bucket_width)
    hours = times.hour.to_numpy() + times.minute.to_numpy() / 60.0
    weekly = np.asarray(cfg.weekly_profile)[times.dayofweek.to_numpy()]
    tenants = {t.org: t.base * t.diurnal(hours) * weekly for t in cfg.tenants}

    rng = np.random.default_rng(cfg.seed)
    bursts = _burst_train(cfg, rng, buckets)
    gain = np.maximum(0.0, 1.0 + cfg.noise * rng.standard_normal(buckets))
    return SynthComponents(start, cfg.bucket_width, tenants, bursts, gain)


def synthesize(cfg: SynthConfig) -> DemandSeries:
    """
    Total demand series for ``cfg``.
    """
    parts = synthesize_components(cfg)
    series = DemandSeries(parts.start, parts.total, parts.bucket_width)
    logger.debug(
        "Synthesized %d buckets from %d tenants (seed=%d)", len(series), cfg.tenant_count, cfg.seed
    )
    return series


def synthesize_records(cfg: SynthConfig) -> list[TraceRecord]:
    """
    A record-level trace whose aggregation reproduces ``synthesize(cfg)``.

    Each tenant contributes one job per bucket holding its (noisy) demand for
    exactly that bucket; bursts are filed as Spot work under ``cfg.burst_org``.
    Zero-demand buckets emit no record.
    """
    parts = synthesize_components(cfg)
    width_s = cfg.bucket_width.total_seconds()
    origin = (parts.start - pd.Timestamp(0, tz="UTC")).total_seconds()
    streams = [(t.org, Priority(t.priority), parts.tenants[t.org]) for t in cfg.tenants]
    streams.append((cfg.burst_org, Priority.SPOT, parts.bursts))

    records: list[TraceRecord] = []
    for org, priority, demand in streams:
        noisy = parts.gain * demand
        for i in np.flatnonzero(noisy > 0):
            begin = origin + i * width_s
            records.append(
                TraceRecord(f"{org}-{i:06d}", begin, begin, begin + width_s, float(noisy[i]), priority, org)
            )
    return records
