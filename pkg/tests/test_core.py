import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbsd.core import (
    ContextualSubset,
    ForecastOutput,
    QbsdConfig,
    compute_quartiles,
    compute_residuals,
    contingency_constant,
    forecast_from_subset,
    interpolated_percentile,
    qbsd_step,
)
from qbsd.errors import ConfigError, EmptyInput, InsufficientHistory, InvalidConstant
from qbsd.timegrid import DAILY, SlotCoord, default_weekly_scheme


def ref_percentile(values, fraction):
    """Brute-force interpolated percentile: position fraction*(n-1) on the
    sorted sample, written independently of the implementation."""
    ordered = sorted(values)
    n = len(ordered)
    pos = fraction * (n - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return float(ordered[lo])
    return ordered[lo] * (hi - pos) + ordered[hi] * (pos - lo)


def make_subset(values, start_slot=10_000):
    samples = tuple(
        (SlotCoord(start_slot + i, DAILY), float(v)) for i, v in enumerate(values)
    )
    return ContextualSubset(samples=samples, requested_size=len(values) + 2)


SCHEME = default_weekly_scheme(4, 1, DAILY)


class TestQuartiles:
    def test_nine_point_sample(self):
        q = compute_quartiles([1, 2, 3, 4, 5, 6, 7, 8, 9])
        assert q.q1 == 3 and q.q3 == 7 and q.iqr == 4

    def test_constant_sample(self):
        q = compute_quartiles([5, 5, 5, 5])
        assert q.q1 == 5 and q.q3 == 5 and q.iqr == 0

    def test_interpolated_positions(self):
        q = compute_quartiles([1, 2, 3, 4])
        assert q.q1 == pytest.approx(1.75, abs=1e-12)
        assert q.q3 == pytest.approx(3.25, abs=1e-12)
        assert q.iqr == pytest.approx(1.5, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            compute_quartiles([])

    def test_matches_bruteforce_oracle(self):
        rng = random.Random(1234)
        for _ in range(1000):
            n = rng.randint(1, 100)
            if rng.random() < 0.3:
                # adversarial duplicates from a tiny value pool
                values = [rng.choice([0.0, 1.0, 2.5]) for _ in range(n)]
            else:
                values = [rng.uniform(-1e3, 1e3) for _ in range(n)]
            got = compute_quartiles(values)
            assert got.q1 == pytest.approx(ref_percentile(values, 0.25), abs=1e-12)
            assert got.q3 == pytest.approx(ref_percentile(values, 0.75), abs=1e-12)

    def test_interpolated_percentile_bounds(self):
        with pytest.raises(ValueError):
            interpolated_percentile([1.0], 1.5)
        assert interpolated_percentile([3.0, 1.0, 2.0], 0.0) == 1.0
        assert interpolated_percentile([3.0, 1.0, 2.0], 1.0) == 3.0


class TestForecastFromSubset:
    def test_interior_mean(self):
        forecast, fallback = forecast_from_subset(list(range(1, 10)))
        assert forecast == 5.0
        assert fallback is False

    def test_constant_falls_back_to_median(self):
        forecast, fallback = forecast_from_subset([7.5] * 6)
        assert forecast == 7.5
        assert fallback is True

    def test_four_point_interior(self):
        forecast, fallback = forecast_from_subset([1, 2, 3, 4])
        assert forecast == 2.5
        assert fallback is False

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            forecast_from_subset([])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
    def test_forecast_bounded_by_sample_extremes(self, values):
        forecast, _ = forecast_from_subset(values)
        assert min(values) <= forecast <= max(values)


class TestResiduals:
    FO = ForecastOutput(forecast=5.0, q1=3.0, q3=7.0, iqr=4.0, sample_count=9, fallback_used=False)

    def test_zero_when_actual_matches(self):
        r = compute_residuals(5.0, self.FO, c=1.0)
        assert r.difference == 0.0 and r.normalized == 0.0

    def test_direct_formula(self):
        r = compute_residuals(10.0, self.FO, c=1.0)
        assert r.difference == 5.0
        assert r.normalized == 1.25

    def test_constant_guards_zero_iqr(self):
        fo = ForecastOutput(5.0, 5.0, 5.0, 0.0, 9, True)
        r = compute_residuals(10.0, fo, c=2.0)
        assert r.difference == 5.0
        assert r.normalized == 2.5

    def test_nonpositive_constant_rejected(self):
        with pytest.raises(InvalidConstant):
            compute_residuals(1.0, self.FO, c=0.0)
        with pytest.raises(InvalidConstant):
            compute_residuals(1.0, self.FO, c=-3.0)


class TestContingencyConstant:
    def test_floor_applies_on_zero_data(self):
        assert contingency_constant([0.0] * 50, floor=1.0) == 1.0

    def test_percentile_of_ramp(self):
        values = [float(v) for v in range(1001)]
        assert contingency_constant(values, floor=1e-6) == 10.0

    def test_absolute_value_of_percentile(self):
        assert contingency_constant([-50.0] * 20, floor=1.0) == 50.0

    def test_errors(self):
        with pytest.raises(EmptyInput):
            contingency_constant([], floor=1.0)
        with pytest.raises(InvalidConstant):
            contingency_constant([1.0], floor=0.0)


class TestQbsdStep:
    def test_full_subset(self):
        cfg = QbsdConfig(scheme=SCHEME, c=1.0, min_samples=4)
        out = qbsd_step(make_subset(range(1, 10)), cfg)
        assert out == ForecastOutput(5.0, 3.0, 7.0, 4.0, 9, False)

    def test_below_threshold(self):
        cfg = QbsdConfig(scheme=SCHEME, c=1.0, min_samples=4)
        with pytest.raises(InsufficientHistory):
            qbsd_step(make_subset([1.0, 2.0]), cfg)

    def test_constant_subset(self):
        cfg = QbsdConfig(scheme=SCHEME, c=1.0, min_samples=4)
        out = qbsd_step(make_subset([3.25] * 7), cfg)
        assert out == ForecastOutput(3.25, 3.25, 3.25, 0.0, 7, True)

    def test_config_validation(self):
        with pytest.raises(InvalidConstant):
            QbsdConfig(scheme=SCHEME, c=0.0)
        with pytest.raises(ConfigError):
            QbsdConfig(scheme=SCHEME, min_samples=2)
        assert QbsdConfig(scheme=SCHEME).k == 1

    def test_subset_validation(self):
        with pytest.raises(ValueError):
            ContextualSubset(
                samples=((SlotCoord(1, DAILY), 1.0), (SlotCoord(1, DAILY), 2.0)),
                requested_size=5,
            )
        with pytest.raises(ValueError):
            ContextualSubset(
                samples=((SlotCoord(1, DAILY), 1.0),),
                requested_size=0,
            )


# Equivariance is exact over the reals; the strategies stick to domains where
# float arithmetic is exact too (integer values/shifts, power-of-two scales)
# so strict-interior membership cannot flip on rounding noise.


@settings(max_examples=150, deadline=None)
@given(
    values=st.lists(st.integers(-10**6, 10**6), min_size=4, max_size=40),
    shift=st.integers(-10**6, 10**6),
)
def test_shift_equivariance(values, shift):
    cfg = QbsdConfig(scheme=SCHEME, c=1.0, min_samples=4)
    base = qbsd_step(make_subset(values), cfg)
    moved = qbsd_step(make_subset([v + shift for v in values]), cfg)
    assert moved.forecast == pytest.approx(base.forecast + shift, abs=1e-7)
    assert moved.q1 == pytest.approx(base.q1 + shift, abs=1e-9)
    assert moved.q3 == pytest.approx(base.q3 + shift, abs=1e-9)
    assert moved.iqr == pytest.approx(base.iqr, abs=1e-9)
    assert moved.fallback_used == base.fallback_used


@settings(max_examples=150, deadline=None)
@given(
    values=st.lists(st.integers(-10**6, 10**6), min_size=4, max_size=40),
    log2_scale=st.integers(-10, 10),
    actual=st.integers(-10**6, 10**6),
)
def test_scale_equivariance(values, log2_scale, actual):
    scale = 2.0**log2_scale
    cfg = QbsdConfig(scheme=SCHEME, c=1.0, min_samples=4)
    base = qbsd_step(make_subset(values), cfg)
    scaled = qbsd_step(make_subset([v * scale for v in values]), cfg)
    assert scaled.forecast == base.forecast * scale
    assert scaled.q1 == base.q1 * scale
    assert scaled.q3 == base.q3 * scale
    assert scaled.iqr == base.iqr * scale
    # normalized residual is invariant when c scales along with the data
    r_base = compute_residuals(actual, base, c=1.0)
    r_scaled = compute_residuals(actual * scale, scaled, c=scale)
    assert r_scaled.normalized == pytest.approx(r_base.normalized, rel=1e-12)
    assert math.isfinite(r_scaled.normalized)
