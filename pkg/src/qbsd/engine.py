"""Per-series rolling state: a FIFO slot-keyed history window plus fit-free
forecasting, and a manager for many independent series.

There is no train/predict split: ``observe`` forecasts from what the buffer
already holds, computes residuals against the new value, and only then
inserts it, so a value can never influence its own forecast.
"""

from __future__ import annotations

import heapq
from typing import Callable, Iterable, Optional

from .core import (
    ContextualSubset,
    ForecastOutput,
    QbsdConfig,
    Residuals,
    compute_residuals,
    qbsd_step,
)
from .errors import ConfigError, GridMisaligned, InsufficientHistory, InsufficientSpan, StaleSlot
from .timegrid import Granularity, SlotCoord, resolve_subset_slots


class SlidingHistory:
    """Bounded slot -> value map retaining the most recent ``capacity`` slots.

    Inserts may arrive out of order within the retained window; slots older
    than the window are rejected. Eviction uses a lazy min-heap so advancing
    the window stays O(log n) amortized per insert.
    """

    __slots__ = ("capacity", "_values", "_heap", "_latest")

    def __init__(self, capacity_slots: int):
        if capacity_slots < 1:
            raise ConfigError(f"capacity must be >= 1 slot, got {capacity_slots}")
        self.capacity = capacity_slots
        self._values: dict[int, float] = {}
        self._heap: list[int] = []
        self._latest: Optional[int] = None

    @property
    def latest(self) -> Optional[int]:
        return self._latest

    def insert(self, slot: int, value: float) -> None:
        if self._latest is not None and slot <= self._latest - self.capacity:
            raise StaleSlot(
                f"slot {slot} is older than the retained window "
                f"(oldest kept: {self._latest - self.capacity + 1})"
            )
        if slot not in self._values:
            heapq.heappush(self._heap, slot)
        self._values[slot] = value
        if self._latest is None or slot > self._latest:
            self._latest = slot
            cutoff = slot - self.capacity
            while self._heap and self._heap[0] <= cutoff:
                self._values.pop(heapq.heappop(self._heap), None)

    def get(self, slot: int) -> Optional[float]:
        return self._values.get(slot)

    def __contains__(self, slot: int) -> bool:
        return slot in self._values

    def __len__(self) -> int:
        return len(self._values)


class RollingForecaster:
    """Rolling QBSD state for one series.

    The buffer capacity defaults to the scheme's deepest lag plus one week
    (28 days for the default 4-week scheme). Capacities down to the scheme
    span still support in-order observe streaming; a larger capacity changes
    memory use but never outputs.
    """

    def __init__(
        self,
        cfg: QbsdConfig,
        granularity: Granularity,
        capacity_slots: Optional[int] = None,
    ):
        scheme = cfg.scheme
        required = scheme.span_slots
        if capacity_slots is None:
            capacity_slots = scheme.max_lag_slots + max(
                granularity.slots_per_week, scheme.k + 1
            )
        elif capacity_slots < required:
            raise ConfigError(
                f"capacity {capacity_slots} is below the scheme span of "
                f"{required} slots"
            )
        self.cfg = cfg
        self.granularity = granularity
        self.history = SlidingHistory(capacity_slots)

    @property
    def latest_slot(self) -> Optional[SlotCoord]:
        latest = self.history.latest
        if latest is None:
            return None
        return SlotCoord(latest, self.granularity)

    def _check_aligned(self, t: SlotCoord) -> None:
        if t.granularity != self.granularity:
            raise GridMisaligned(
                f"slot on a {t.granularity.interval_seconds} s grid fed to a "
                f"{self.granularity.interval_seconds} s forecaster"
            )

    def ingest_history(self, batch: Iterable[tuple[SlotCoord, float]]) -> None:
        """Insert observed values; newest write wins on duplicate slots and
        anything pushed out of the window is evicted."""
        for t, value in batch:
            self._check_aligned(t)
            self.history.insert(t.global_slot, value)

    def forecast_at(self, t: SlotCoord) -> ForecastOutput:
        """Forecast for slot t from history alone. The output is identical
        whether or not a value at t (or later) has been observed."""
        self._check_aligned(t)
        coords = resolve_subset_slots(t, self.cfg.scheme)
        get = self.history.get
        samples = []
        for coord in coords:
            value = get(coord.global_slot)
            if value is not None:
                samples.append((coord, value))
        subset = ContextualSubset(
            samples=tuple(samples),
            requested_size=self.cfg.scheme.subset_size,
        )
        return qbsd_step(subset, self.cfg)

    def observe(self, t: SlotCoord, value: float) -> tuple[Residuals, ForecastOutput]:
        """Forecast slot t, score the new value against it, then buffer the
        value. During warmup the value is still buffered before the error
        propagates."""
        self._check_aligned(t)
        try:
            fo = self.forecast_at(t)
        except (InsufficientHistory, InsufficientSpan):
            self.history.insert(t.global_slot, value)
            raise
        residuals = compute_residuals(value, fo, self.cfg.c)
        self.history.insert(t.global_slot, value)
        return residuals, fo


class MultiSeriesEngine:
    """Keyed collection of independent forecasters, created on first use.

    No state is shared between series, so disjoint series may be processed
    from different threads.
    """

    def __init__(self, factory: Callable[[], RollingForecaster]):
        self._factory = factory
        self._series: dict[str, RollingForecaster] = {}

    def forecaster(self, series_id: str) -> RollingForecaster:
        f = self._series.get(series_id)
        if f is None:
            f = self._factory()
            self._series[series_id] = f
        return f

    def forecast_at(self, series_id: str, t: SlotCoord) -> ForecastOutput:
        return self.forecaster(series_id).forecast_at(t)

    def observe(
        self, series_id: str, t: SlotCoord, value: float
    ) -> tuple[Residuals, ForecastOutput]:
        return self.forecaster(series_id).observe(t, value)

    def series_ids(self) -> list[str]:
        return sorted(self._series)

    def __len__(self) -> int:
        return len(self._series)
