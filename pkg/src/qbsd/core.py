"""Quartile math over contextual subsets.

For each target slot the contextual subset yields Q1, Q3 and the IQR (the
time-varying expected operating range), a forecast equal to the mean of the
samples strictly inside (Q1, Q3), and two residuals against the observed
value: the raw difference and the difference normalized by max(IQR, c).

Everything here is a pure function of its inputs; subsets are small (6k+3
samples for the default weekly scheme), so plain sorted lists beat array
round-trips on the per-forecast hot path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, EmptyInput, InsufficientHistory, InvalidConstant
from .timegrid import SeasonalityScheme, SlotCoord

DEFAULT_MIN_SAMPLES = 4
# Contingency-constant floors: counts and other integer-valued series vs
# continuous ones.
DEFAULT_C_FLOOR_INTEGER = 1.0
DEFAULT_C_FLOOR_CONTINUOUS = 1e-6


def _percentile_sorted(ordered: Sequence[float], fraction: float) -> float:
    """Percentile at position fraction*(n-1) with linear interpolation
    between the two closest ranks."""
    pos = fraction * (len(ordered) - 1)
    lo = int(pos)
    rem = pos - lo
    if rem == 0.0:
        return float(ordered[lo])
    return ordered[lo] + rem * (ordered[lo + 1] - ordered[lo])


def interpolated_percentile(values: Sequence[float], fraction: float) -> float:
    """Interpolated percentile of an unsorted sample, fraction in [0, 1]."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if len(values) == 0:
        raise EmptyInput("percentile of an empty sample")
    return _percentile_sorted(sorted(values), fraction)


@dataclass(frozen=True)
class Quartiles:
    q1: float
    q3: float

    def __post_init__(self) -> None:
        if self.q1 > self.q3:
            raise ValueError(f"q1 ({self.q1}) must not exceed q3 ({self.q3})")

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


@dataclass(frozen=True)
class ForecastOutput:
    """One slot's forecast plus its expected operating range.

    ``fallback_used`` marks subsets whose strict interior (Q1, Q3) was empty
    (constant or two-valued samples); the forecast is then the subset median.
    """

    forecast: float
    q1: float
    q3: float
    iqr: float
    sample_count: int
    fallback_used: bool


@dataclass(frozen=True)
class Residuals:
    difference: float
    normalized: float


@dataclass(frozen=True)
class ContextualSubset:
    """Samples actually present for a target slot; gaps shrink the subset
    below ``requested_size`` without invalidating it."""

    samples: tuple[tuple[SlotCoord, float], ...]
    requested_size: int

    def __post_init__(self) -> None:
        if len(self.samples) > self.requested_size:
            raise ValueError(
                f"{len(self.samples)} samples exceed requested size "
                f"{self.requested_size}"
            )
        slots = {coord.global_slot for coord, _ in self.samples}
        if len(slots) != len(self.samples):
            raise ValueError("subset slots must be distinct")

    @property
    def present_count(self) -> int:
        return len(self.samples)

    def values(self) -> list[float]:
        return [value for _, value in self.samples]


@dataclass(frozen=True)
class QbsdConfig:
    """Scheme plus the contingency constant and the validity threshold under
    missing data. k is derived from the scheme's windows."""

    scheme: SeasonalityScheme
    c: float = DEFAULT_C_FLOOR_INTEGER
    min_samples: int = DEFAULT_MIN_SAMPLES

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise InvalidConstant(f"contingency constant must be > 0, got {self.c}")
        if self.min_samples < 3:
            raise ConfigError(f"min_samples must be >= 3, got {self.min_samples}")

    @property
    def k(self) -> int:
        return self.scheme.k


def compute_quartiles(values: Sequence[float]) -> Quartiles:
    """Q1/Q3 as the 25th/75th interpolated percentiles of the sample."""
    if len(values) == 0:
        raise EmptyInput("quartiles of an empty sample")
    ordered = sorted(values)
    return Quartiles(
        q1=_percentile_sorted(ordered, 0.25),
        q3=_percentile_sorted(ordered, 0.75),
    )


def forecast_from_subset(values: Sequence[float]) -> tuple[float, bool]:
    """Mean of the samples strictly between Q1 and Q3.

    The strict inequalities reject outliers but can select nothing (e.g. a
    constant subset has Q1 == Q3); the median is then returned with a
    fallback marker.
    """
    if len(values) == 0:
        raise EmptyInput("forecast from an empty sample")
    ordered = sorted(values)
    q1 = _percentile_sorted(ordered, 0.25)
    q3 = _percentile_sorted(ordered, 0.75)
    interior = [x for x in ordered if q1 < x < q3]
    if interior:
        return sum(interior) / len(interior), False
    return _percentile_sorted(ordered, 0.5), True


def compute_residuals(actual: float, fo: ForecastOutput, c: float) -> Residuals:
    """Difference and normalized residuals of an observation against its
    forecast; max(IQR, c) keeps the denominator positive."""
    if not c > 0:
        raise InvalidConstant(f"contingency constant must be > 0, got {c}")
    difference = actual - fo.forecast
    return Residuals(
        difference=difference,
        normalized=difference / max(fo.iqr, c),
    )


def contingency_constant(training_values: Sequence[float], floor: float) -> float:
    """|1st percentile| of the training data, floored.

    The floor guards series whose low percentile is ~0, where a tiny
    denominator would make the normalized residual hypersensitive.
    """
    if not floor > 0:
        raise InvalidConstant(f"floor must be > 0, got {floor}")
    if len(training_values) == 0:
        raise EmptyInput("contingency constant of an empty sample")
    return max(abs(interpolated_percentile(training_values, 0.01)), floor)


def qbsd_step(subset: ContextualSubset, cfg: QbsdConfig) -> ForecastOutput:
    """Full per-slot computation: quartiles of the present samples, then the
    interior-mean forecast."""
    if subset.present_count < cfg.min_samples:
        raise InsufficientHistory(
            f"{subset.present_count} of {subset.requested_size} subset samples "
            f"present, need at least {cfg.min_samples}"
        )
    values = subset.values()
    quartiles = compute_quartiles(values)
    forecast, fallback_used = forecast_from_subset(values)
    return ForecastOutput(
        forecast=forecast,
        q1=quartiles.q1,
        q3=quartiles.q3,
        iqr=quartiles.iqr,
        sample_count=subset.present_count,
        fallback_used=fallback_used,
    )
