"""Kaplan-Meier estimation, restricted means, and the two-group log-rank test.

All operations consume (duration, event_observed) pairs. Survival records
plug in directly: their censored flag means "removal observed", so it IS the
event indicator. Tied times follow the standard convention that events are
processed before censorings, i.e. subjects censored at t still count as at
risk at t.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable

from .tracking import SurvivalRecord

# slack for detecting a survival level that is mathematically exact but was
# computed as a float product (e.g. 0.5 reached via 5/6 * 4/5 * 3/4)
_LEVEL_EPS = 1e-12


def _as_pairs(records: Iterable) -> list[tuple[float, bool]]:
    """Accept SurvivalRecord objects or bare (duration, event) tuples."""
    pairs = []
    for r in records:
        if isinstance(r, SurvivalRecord):
            pairs.append((float(r.duration_days), r.event_observed))
        else:
            duration, event = r
            pairs.append((float(duration), bool(event)))
    return pairs


@dataclass(frozen=True)
class CurvePoint:
    time_days: float
    n_at_risk: int
    n_events: int
    survival: float


@dataclass(frozen=True)
class SurvivalCurve:
    """Product-limit step function; survival is 1 before the first point."""

    points: tuple[CurvePoint, ...]
    tau: float

    def __post_init__(self):
        prev_time = -math.inf
        running = 1.0
        for p in self.points:
            if not p.time_days > prev_time:
                raise ValueError("curve times must be strictly increasing")
            prev_time = p.time_days
            if p.n_events:
                running *= 1.0 - p.n_events / p.n_at_risk
            if abs(p.survival - running) > 1e-12:
                raise ValueError(f"survival at t={p.time_days} differs from the product limit")
            if not 0.0 <= p.survival <= 1.0:
                raise ValueError("survival out of [0, 1]")

    def survival_at(self, t: float) -> float:
        """S(t), right-continuous."""
        s = 1.0
        for p in self.points:
            if p.time_days > t:
                break
            s = p.survival
        return s


def kaplan_meier(records: Iterable) -> SurvivalCurve:
    """Product-limit estimate over the distinct observed times.

    Every distinct duration contributes a point (censoring-only times keep
    the running level), so the curve doubles as a full risk table.
    """
    pairs = _as_pairs(records)
    if not pairs:
        raise ValueError("no records")
    pairs.sort()
    n = len(pairs)
    points = []
    s = 1.0
    i = 0
    while i < n:
        t = pairs[i][0]
        at_risk = n - i
        events = 0
        while i < n and pairs[i][0] == t:
            events += pairs[i][1]
            i += 1
        if events:
            s *= 1.0 - events / at_risk
        points.append(CurvePoint(time_days=t, n_at_risk=at_risk, n_events=events, survival=s))
    return SurvivalCurve(points=tuple(points), tau=points[-1].time_days)


def median_survival(curve: SurvivalCurve) -> float | None:
    """Smallest time where survival falls to 0.5 or below; None when the
    curve never gets there."""
    for p in curve.points:
        if p.survival <= 0.5 + _LEVEL_EPS:
            return p.time_days
    return None


def restricted_mean(curve: SurvivalCurve, tau: float | None = None) -> tuple[float, float]:
    """Area under the survival step function on [0, tau], with its standard
    error from the Greenwood-style variance
    sum_i area_i^2 * d_i / (n_i * (n_i - d_i)) over event times (terms with
    n_i == d_i are skipped)."""
    if tau is None:
        tau = curve.tau
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if tau > curve.tau:
        raise ValueError(f"tau {tau} exceeds the observed horizon {curve.tau}")

    # step segments of S on [0, tau]
    area = 0.0
    prev_time = 0.0
    level = 1.0
    segments = []  # (start, end, level) covering [0, tau]
    for p in curve.points:
        if p.time_days >= tau:
            break
        if p.time_days > prev_time:
            segments.append((prev_time, p.time_days, level))
        prev_time = p.time_days
        level = p.survival
    if tau > prev_time:
        segments.append((prev_time, tau, level))
    area = sum((end - start) * lvl for start, end, lvl in segments)

    variance = 0.0
    for p in curve.points:
        if p.time_days > tau:
            break
        if p.n_events == 0 or p.n_events >= p.n_at_risk:
            continue
        tail_area = sum(
            (min(end, tau) - max(start, p.time_days)) * lvl
            for start, end, lvl in segments
            if end > p.time_days
        )
        variance += tail_area**2 * p.n_events / (p.n_at_risk * (p.n_at_risk - p.n_events))
    return area, math.sqrt(variance)


@dataclass(frozen=True)
class GroupSummary:
    found: int
    removed: int
    pct_removed: float
    median_days: float | None
    rmean_days: float
    se_rmean: float


def summarize(records: Iterable) -> GroupSummary:
    """Found/removed counts plus median and restricted mean at the group's
    own horizon."""
    pairs = _as_pairs(records)
    if not pairs:
        raise ValueError("no records")
    curve = kaplan_meier(pairs)
    if curve.tau > 0:
        rmean, se = restricted_mean(curve)
    else:
        # every instance was first seen in the final snapshot: zero horizon
        rmean, se = 0.0, 0.0
    removed = sum(1 for _, event in pairs if event)
    return GroupSummary(
        found=len(pairs),
        removed=removed,
        pct_removed=removed / len(pairs),
        median_days=median_survival(curve),
        rmean_days=rmean,
        se_rmean=se,
    )


@dataclass(frozen=True)
class LogRankResult:
    statistic: float
    p_value: float
    observed: tuple[int, int]
    expected: tuple[float, float]
    warning: str | None = None


def _chi2_sf_1df(x: float) -> float:
    return math.erfc(math.sqrt(x / 2.0))


def log_rank(records_a: Iterable, records_b: Iterable) -> LogRankResult:
    """Two-group log-rank test.

    At each distinct pooled event time, the expected events in group A follow
    the hypergeometric mean n_A * d / n with variance
    d * (n_A/n) * (1 - n_A/n) * (n - d) / (n - 1) (skipped when n == 1); the
    statistic (O_A - E_A)^2 / V is chi-square with 1 degree of freedom.
    """
    pairs_a = _as_pairs(records_a)
    pairs_b = _as_pairs(records_b)
    if not pairs_a or not pairs_b:
        raise ValueError("both groups must be non-empty")

    durs_a = sorted(t for t, _ in pairs_a)
    durs_b = sorted(t for t, _ in pairs_b)
    events_a: dict[float, int] = {}
    events_b: dict[float, int] = {}
    for t, event in pairs_a:
        if event:
            events_a[t] = events_a.get(t, 0) + 1
    for t, event in pairs_b:
        if event:
            events_b[t] = events_b.get(t, 0) + 1
    event_times = sorted(set(events_a) | set(events_b))
    if not event_times:
        raise ValueError("test undefined: no events in the pooled data")

    observed_a = 0
    expected_a = 0.0
    variance = 0.0
    total_events = 0
    for t in event_times:
        n_a = len(durs_a) - bisect_left(durs_a, t)
        n_b = len(durs_b) - bisect_left(durs_b, t)
        n = n_a + n_b
        d_a = events_a.get(t, 0)
        d = d_a + events_b.get(t, 0)
        observed_a += d_a
        expected_a += n_a * d / n
        total_events += d
        if n > 1:
            share = n_a / n
            variance += d * share * (1.0 - share) * (n - d) / (n - 1)

    diff = observed_a - expected_a
    statistic = diff * diff / variance if variance > 0 else 0.0
    p_value = _chi2_sf_1df(statistic)
    warning = None
    if sum(events_a.values()) == 0 or sum(events_b.values()) == 0:
        warning = "a group has no observed events; the test is unreliable"
    return LogRankResult(
        statistic=statistic,
        p_value=p_value,
        observed=(observed_a, total_events - observed_a),
        expected=(expected_a, total_events - expected_a),
        warning=warning,
    )


@dataclass(frozen=True)
class GroupComparison:
    partition: str
    labels: tuple[str, str]
    summaries: dict[str, GroupSummary]
    test: LogRankResult


def compare_groups(records: list[SurvivalRecord], partition: str) -> GroupComparison:
    """Summaries plus log-rank over a two-way partition of the records.

    partition="scope" splits localized vs scattered; partition="timeframe"
    splits on the records' timeframe field, which for view 1 must already be
    the truncated sub-study records from assign_timeframes.
    """
    if partition == "scope":
        labels = ("localized", "scattered")
        group_of = lambda r: r.scope.value
    elif partition == "timeframe":
        labels = ("1", "2")
        group_of = lambda r: str(r.timeframe)
    else:
        raise ValueError(f"unknown partition {partition!r}")

    groups: dict[str, list[SurvivalRecord]] = {label: [] for label in labels}
    for record in records:
        label = group_of(record)
        if label not in groups:
            raise ValueError(f"record outside partition {partition}: {label!r}")
        groups[label].append(record)
    for label in labels:
        if not groups[label]:
            raise ValueError(f"empty group: {label}")

    summaries = {label: summarize(groups[label]) for label in labels}
    test = log_rank(groups[labels[0]], groups[labels[1]])
    return GroupComparison(partition=partition, labels=labels, summaries=summaries, test=test)
