"""Reference forecasters for harness comparisons.

These obey the same no-leakage contract as the quartile forecaster: a
forecast for slot t only ever reads slots strictly before t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Union

from .errors import ConfigError, InsufficientHistory
from .timegrid import SlotCoord


class HistoryView(Protocol):
    def get(self, slot: int) -> float | None: ...


@dataclass(frozen=True)
class SeasonalNaive:
    """Forecast the value one season back, e.g. the same slot last week."""

    season_slots: int

    def __post_init__(self) -> None:
        if self.season_slots < 1:
            raise ConfigError(f"season_slots must be >= 1, got {self.season_slots}")


@dataclass(frozen=True)
class Persistence:
    """Forecast the previous slot's value."""


@dataclass(frozen=True)
class MovingAverage:
    """Forecast the mean of the trailing window."""

    window_slots: int

    def __post_init__(self) -> None:
        if self.window_slots < 1:
            raise ConfigError(f"window_slots must be >= 1, got {self.window_slots}")


BaselineSpec = Union[SeasonalNaive, Persistence, MovingAverage]


def baseline_forecast(
    history: HistoryView, t: SlotCoord | int, spec: BaselineSpec
) -> float:
    slot = t.global_slot if isinstance(t, SlotCoord) else int(t)
    if isinstance(spec, SeasonalNaive):
        lagged = slot - spec.season_slots
        value = history.get(lagged) if lagged >= 0 else None
        if value is None:
            raise InsufficientHistory(
                f"seasonal-naive needs a value at slot {lagged}"
            )
        return value
    if isinstance(spec, Persistence):
        value = history.get(slot - 1) if slot >= 1 else None
        if value is None:
            raise InsufficientHistory(f"persistence needs a value at slot {slot - 1}")
        return value
    window = []
    for s in range(max(0, slot - spec.window_slots), slot):
        value = history.get(s)
        if value is not None:
            window.append(value)
    if not window:
        raise InsufficientHistory(
            f"moving average found no values in the {spec.window_slots} slots "
            f"before slot {slot}"
        )
    return sum(window) / len(window)
