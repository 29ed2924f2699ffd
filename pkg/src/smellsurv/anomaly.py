"""Per-version change rates of smell counts, size, and smell density.

The density of a version is total occurrences divided by logical lines of
code; its relative change between consecutive versions is the anomaly
signal, flagged against the +50% / +100% / -50% thresholds. A previous
count of zero maps to 0 (nothing appeared) or +infinity (smells appeared
out of nowhere, treated as the strongest increase).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .ingest import History
from .tracking import split_instant


def change_rate(prev: float, cur: float) -> float:
    """Relative change cur/prev - 1; 0 -> 0 gives 0.0, 0 -> positive gives
    +infinity."""
    if prev < 0 or cur < 0:
        raise ValueError(f"change rates are defined for non-negative values, got {prev}, {cur}")
    if prev > 0:
        return cur / prev - 1.0
    return 0.0 if cur == 0 else math.inf


@dataclass(frozen=True)
class DensityPoint:
    version_id: str
    timestamp: datetime
    cs_count: int
    lloc: int
    rho: float
    delta_cs: float | None
    delta_lloc: float | None
    delta_rho: float | None


def _density_change(cs_prev: int, lloc_prev: int, cs_cur: int, lloc_cur: int) -> float:
    """Change rate of cs/lloc between two versions.

    Computed from the integer cross product rather than the two rounded
    densities: a version sitting exactly on a threshold (say counts 100 ->
    150 at constant size) then classifies exactly.
    """
    if cs_prev == 0:
        return 0.0 if cs_cur == 0 else math.inf
    return (cs_cur * lloc_prev) / (cs_prev * lloc_cur) - 1.0


def density_series(history: History) -> list[DensityPoint]:
    """Per-version count, density, and consecutive change rates.

    The first version has no predecessor, so its deltas are undefined.
    """
    points = []
    prev: DensityPoint | None = None
    for snap in history.snapshots:
        cs_count = len(snap.occurrences)
        lloc = snap.size.lloc
        rho = cs_count / lloc
        if prev is None:
            deltas = (None, None, None)
        else:
            deltas = (
                change_rate(prev.cs_count, cs_count),
                change_rate(prev.lloc, lloc),
                _density_change(prev.cs_count, prev.lloc, cs_count, lloc),
            )
        point = DensityPoint(
            version_id=snap.version_id,
            timestamp=snap.timestamp,
            cs_count=cs_count,
            lloc=lloc,
            rho=rho,
            delta_cs=deltas[0],
            delta_lloc=deltas[1],
            delta_rho=deltas[2],
        )
        points.append(point)
        prev = point
    return points


class AnomalyKind(Enum):
    INCREASE_50 = "increase_50"
    INCREASE_100 = "increase_100"
    DECREASE_50 = "decrease_50"


@dataclass(frozen=True)
class AnomalyThresholds:
    up: float = 0.5
    up2: float = 1.0
    down: float = -0.5

    def __post_init__(self):
        if not (self.down < 0 < self.up <= self.up2):
            raise ValueError(
                f"thresholds must satisfy down < 0 < up <= up2, got {self.down}, {self.up}, {self.up2}"
            )


@dataclass(frozen=True)
class AnomalyFlag:
    version_id: str
    kind: AnomalyKind
    delta_rho: float


def flag_anomalies(
    series: list[DensityPoint],
    thresholds: AnomalyThresholds | None = None,
) -> list[AnomalyFlag]:
    """One flag per version whose density change crosses a threshold.

    Crossings are inclusive (a change of exactly +50% flags); an infinite
    increase counts as the strongest one. The first version is never
    flagged: it has no change rate.
    """
    if thresholds is None:
        thresholds = AnomalyThresholds()
    flags = []
    for point in series:
        delta = point.delta_rho
        if delta is None:
            continue
        if delta >= thresholds.up2 or math.isinf(delta):
            kind = AnomalyKind.INCREASE_100
        elif delta >= thresholds.up:
            kind = AnomalyKind.INCREASE_50
        elif delta <= thresholds.down:
            kind = AnomalyKind.DECREASE_50
        else:
            continue
        flags.append(AnomalyFlag(version_id=point.version_id, kind=kind, delta_rho=delta))
    return flags


@dataclass(frozen=True)
class ChangeRates:
    """Relative change of the size metrics between two chosen versions.

    A rate is None when the metric is missing at either endpoint.
    """

    d_loc: float | None
    d_lloc: float
    d_classes: float | None


def metric_change_rates(history: History, split: datetime | None = None) -> ChangeRates:
    """Size change between the last version at or before the split and the
    last version overall. Default split: the temporal midpoint."""
    if split is None:
        split = split_instant(history)
    before = [snap for snap in history.snapshots if snap.timestamp <= split]
    if not before:
        raise ValueError("no snapshot at or before the split instant")
    start = before[-1].size
    end = history.snapshots[-1].size

    def optional_rate(a: int | None, b: int | None) -> float | None:
        if a is None or b is None:
            return None
        return change_rate(a, b)

    return ChangeRates(
        d_loc=optional_rate(start.loc, end.loc),
        d_lloc=change_rate(start.lloc, end.lloc),
        d_classes=optional_rate(start.classes, end.classes),
    )
