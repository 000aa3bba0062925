"""Forecast-accuracy metrics and the Wilcoxon signed-rank test.

MAPE excludes points whose actual value is exactly zero and reports how many
were excluded; percentage errors at zero are undefined and KPI series
routinely sit at zero overnight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateVariance, EmptyInput, TooFewPairs

ALTERNATIVES = ("less", "greater", "two_sided")


@dataclass(frozen=True)
class EvalPairs:
    actual: tuple[float, ...]
    predicted: tuple[float, ...]

    def __init__(self, actual: Sequence[float], predicted: Sequence[float]):
        object.__setattr__(self, "actual", tuple(float(v) for v in actual))
        object.__setattr__(self, "predicted", tuple(float(v) for v in predicted))
        if len(self.actual) != len(self.predicted):
            raise ValueError(
                f"length mismatch: {len(self.actual)} actual vs "
                f"{len(self.predicted)} predicted"
            )
        if not self.actual:
            raise EmptyInput("no evaluation pairs")

    def __len__(self) -> int:
        return len(self.actual)


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    mape: float
    r2: float
    mape_excluded_count: int


def evaluate(pairs: EvalPairs) -> MetricsReport:
    """MAE, MSE, RMSE, MAPE (percent) and R^2 over paired points."""
    n = len(pairs)
    abs_sum = 0.0
    sq_sum = 0.0
    mape_sum = 0.0
    excluded = 0
    for y, y_hat in zip(pairs.actual, pairs.predicted):
        err = y - y_hat
        abs_sum += abs(err)
        sq_sum += err * err
        if y != 0.0:
            mape_sum += abs(err) / abs(y)
        else:
            excluded += 1
    y_mean = sum(pairs.actual) / n
    ss_tot = 0.0
    for y in pairs.actual:
        dev = y - y_mean
        ss_tot += dev * dev
    if ss_tot == 0.0:
        if n > 1:
            raise DegenerateVariance(
                "actual values are all identical; R^2 is undefined"
            )
        r2 = math.nan  # a single point carries no variance to explain
    else:
        r2 = 1.0 - sq_sum / ss_tot
    scored = n - excluded
    return MetricsReport(
        mae=abs_sum / n,
        mse=sq_sum / n,
        rmse=math.sqrt(sq_sum / n),
        mape=100.0 * mape_sum / scored if scored else math.nan,
        r2=r2,
        mape_excluded_count=excluded,
    )


def _average_ranks(values: Sequence[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=values.__getitem__)
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j + 2) / 2  # 1-based average rank for the tie group
        for idx in order[i : j + 1]:
            ranks[idx] = rank
        i = j + 1
    return ranks


def _exact_tail_probs(ranks: Sequence[float], w_plus: float) -> tuple[float, float]:
    """P(W >= w) and P(W <= w) by enumerating every sign assignment."""
    n = len(ranks)
    total = 1 << n
    ge = 0
    le = 0
    for mask in range(total):
        w = 0.0
        m = mask
        idx = 0
        while m:
            if m & 1:
                w += ranks[idx]
            m >>= 1
            idx += 1
        if w >= w_plus:
            ge += 1
        if w <= w_plus:
            le += 1
    return ge / total, le / total


def _approx_tail_probs(
    ranks: Sequence[float], w_plus: float
) -> tuple[float, float]:
    """Normal approximation with tie and continuity corrections."""
    n = len(ranks)
    mu = n * (n + 1) / 4
    tie_counts: dict[float, int] = {}
    for r in ranks:
        tie_counts[r] = tie_counts.get(r, 0) + 1
    tie_term = sum(t**3 - t for t in tie_counts.values()) / 48
    var = n * (n + 1) * (2 * n + 1) / 24 - tie_term
    sd = math.sqrt(var)
    p_ge = 0.5 * math.erfc((w_plus - mu - 0.5) / (sd * math.sqrt(2)))
    p_le = 0.5 * math.erfc((mu - w_plus - 0.5) / (sd * math.sqrt(2)))
    return p_ge, p_le


def wilcoxon_signed_rank(
    errors_a: Sequence[float],
    errors_b: Sequence[float],
    alternative: str = "two_sided",
    mode: str = "auto",
) -> float:
    """Paired signed-rank test on errors_a - errors_b.

    ``alternative="greater"`` tests whether a tends to exceed b, ``"less"``
    the reverse. Zero differences are dropped; at least five informative
    pairs must remain. Up to 12 pairs the p-value comes from enumerating all
    2^n sign assignments of the observed ranks; beyond that from the normal
    approximation with tie and continuity corrections (``mode`` forces one
    branch).
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    if mode not in ("auto", "exact", "approx"):
        raise ValueError(f"mode must be auto, exact, or approx, got {mode!r}")
    if len(errors_a) != len(errors_b):
        raise ValueError(
            f"length mismatch: {len(errors_a)} vs {len(errors_b)} errors"
        )
    diffs = [a - b for a, b in zip(errors_a, errors_b) if a - b != 0.0]
    n = len(diffs)
    if n < 5:
        raise TooFewPairs(
            f"{n} non-zero differences; need at least 5 informative pairs"
        )
    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    exact = mode == "exact" or (mode == "auto" and n <= 12)
    if exact:
        p_ge, p_le = _exact_tail_probs(ranks, w_plus)
    else:
        p_ge, p_le = _approx_tail_probs(ranks, w_plus)
    if alternative == "greater":
        return p_ge
    if alternative == "less":
        return p_le
    return min(1.0, 2.0 * min(p_ge, p_le))
