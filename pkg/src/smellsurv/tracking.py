"""Turning per-version occurrence sets into per-instance survival records.

An instance is identified by (rule, file, entity path, ordinal); the ordinal
separates multiple same-rule occurrences in one entity and is assigned by
line order within each version, so pure line shifts do not break identity.
A file or class rename DOES break identity and shows up as one removal plus
one addition; the optional rename heuristic re-joins such pairs.

Lifetime bookkeeping follows the removal convention: censored=1 means the
instance disappeared (the event was observed, dated at the first version
where it is absent), censored=0 means it is still present in the final
snapshot. Statistical consumers should read the flag as event_observed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta

from .ingest import History
from .rules import RuleId, Scope, SmellOccurrence, _RULE_ORDER, scope_of


@dataclass(frozen=True)
class InstanceKey:
    rule: RuleId
    file: str
    entity_path: str
    ordinal: int

    def location(self) -> str:
        return f"{self.file}::{self.entity_path}::{self.ordinal}"


@dataclass(frozen=True)
class TrackingOptions:
    gap_tolerance: int = 0
    rename_heuristic: bool = False

    def __post_init__(self):
        if self.gap_tolerance < 0:
            raise ValueError(f"gap_tolerance must be >= 0, got {self.gap_tolerance}")


@dataclass(frozen=True)
class SurvivalRecord:
    key: InstanceKey
    scope: Scope
    first_version: str
    first_date: datetime
    last_present_version: str
    end_date: datetime | None
    censored: int
    duration_days: float
    timeframe: int

    def __post_init__(self):
        if (self.censored == 1) != (self.end_date is not None):
            raise ValueError("censored=1 exactly when an end date is present")
        if self.duration_days < 0:
            raise ValueError(f"negative duration {self.duration_days}")

    @property
    def event_observed(self) -> bool:
        return self.censored == 1


def make_key(occurrence: SmellOccurrence, ordinal: int = 0) -> InstanceKey:
    """Key for one occurrence; the ordinal must come from assign_keys when
    several same-rule occurrences share a file and entity path."""
    return InstanceKey(
        rule=occurrence.rule,
        file=occurrence.file,
        entity_path=occurrence.entity_path,
        ordinal=ordinal,
    )


def assign_keys(occurrences: list[SmellOccurrence]) -> list[InstanceKey]:
    """Keys for one version's occurrences, parallel to the input list.

    Within each (rule, file, entity_path) group, ordinals follow ascending
    begin_line (occurrences without line info sort first, in input order).
    """
    groups: dict[tuple[RuleId, str, str], list[int]] = {}
    for idx, occ in enumerate(occurrences):
        groups.setdefault((occ.rule, occ.file, occ.entity_path), []).append(idx)
    keys: list[InstanceKey | None] = [None] * len(occurrences)
    for members in groups.values():
        members.sort(
            key=lambda i: (
                occurrences[i].begin_line if occurrences[i].begin_line is not None else -1,
                occurrences[i].end_line if occurrences[i].end_line is not None else -1,
            )
        )
        for ordinal, i in enumerate(members):
            keys[i] = make_key(occurrences[i], ordinal)
    return keys  # type: ignore[return-value]


def apply_rename_heuristic(
    removed_keys: set[InstanceKey],
    added_keys: set[InstanceKey],
) -> list[tuple[InstanceKey, InstanceKey]]:
    """Pair removals with additions that look like renames in one transition.

    A pair needs equal rule, equal non-empty entity path, and differing
    files. Matching is greedy and deterministic: additions are handled in
    (file, entity_path, ordinal) order and each takes the candidate removal
    with the lexicographically smallest (file, ordinal); every key is
    matched at most once.
    """
    by_identity: dict[tuple[RuleId, str], list[InstanceKey]] = {}
    for key in removed_keys:
        if key.entity_path:
            by_identity.setdefault((key.rule, key.entity_path), []).append(key)
    for candidates in by_identity.values():
        candidates.sort(key=lambda k: (k.file, k.ordinal))

    pairs = []
    for added in sorted(added_keys, key=lambda k: (k.file, k.entity_path, k.ordinal, _RULE_ORDER[k.rule])):
        if not added.entity_path:
            continue
        candidates = by_identity.get((added.rule, added.entity_path))
        if not candidates:
            continue
        match = next((c for c in candidates if c.file != added.file), None)
        if match is None:
            continue
        candidates.remove(match)
        pairs.append((match, added))
    return pairs


@dataclass
class _Run:
    key: InstanceKey  # the key the instance was born under
    current_key: InstanceKey
    first_idx: int
    last_present_idx: int
    gap: int = 0


def _days_between(start: datetime, end: datetime) -> float:
    return (end - start).total_seconds() / 86400.0


def split_instant(history: History) -> datetime:
    """Temporal midpoint of the observation span: first timestamp plus half
    the distance to the last."""
    first = history.snapshots[0].timestamp
    last = history.snapshots[-1].timestamp
    return first + (last - first) / 2


def build_survival_records(
    history: History,
    options: TrackingOptions | None = None,
) -> list[SurvivalRecord]:
    """Decompose each key's presence across versions into survival records.

    Each maximal run of presence (bridging absences of at most gap_tolerance
    consecutive versions) yields one record. A run that ends before the last
    snapshot is an observed removal (censored=1) dated at the first version
    where the key is absent; a run alive in the final snapshot is censored=0
    and measured to the last observation date. A key that disappears and
    returns beyond the tolerance starts a new record.
    """
    if options is None:
        options = TrackingOptions()
    if len(history.snapshots) < 2:
        raise ValueError("survival tracking needs at least 2 snapshots")

    timestamps = [snap.timestamp for snap in history.snapshots]
    version_ids = [snap.version_id for snap in history.snapshots]
    keysets = [set(assign_keys(list(snap.occurrences))) for snap in history.snapshots]
    split = split_instant(history)
    final_idx = len(keysets) - 1

    records: list[SurvivalRecord] = []

    def close_run(run: _Run, censored: int) -> None:
        first_date = timestamps[run.first_idx]
        if censored:
            end_date = timestamps[run.last_present_idx + 1]
            duration = _days_between(first_date, end_date)
        else:
            end_date = None
            duration = _days_between(first_date, timestamps[final_idx])
        records.append(
            SurvivalRecord(
                key=run.key,
                scope=scope_of(run.key.rule),
                first_version=version_ids[run.first_idx],
                first_date=first_date,
                last_present_version=version_ids[run.last_present_idx],
                end_date=end_date,
                censored=censored,
                duration_days=duration,
                timeframe=1 if first_date < split else 2,
            )
        )

    open_runs: dict[InstanceKey, _Run] = {}
    for idx, keys in enumerate(keysets):
        if idx > 0 and options.rename_heuristic:
            removed_now = keysets[idx - 1] - keys
            added_now = keys - keysets[idx - 1]
            for old_key, new_key in apply_rename_heuristic(removed_now, added_now):
                run = open_runs.get(old_key)
                # new_key may already carry a gap-bridged run of its own;
                # that run keeps its identity and the removal stays a removal
                if run is None or new_key in open_runs:
                    continue
                del open_runs[old_key]
                run.current_key = new_key
                open_runs[new_key] = run

        for key in keys:
            run = open_runs.get(key)
            if run is None:
                open_runs[key] = _Run(key=key, current_key=key, first_idx=idx, last_present_idx=idx)
            else:
                run.last_present_idx = idx
                run.gap = 0

        expired = []
        for key, run in open_runs.items():
            if key in keys:
                continue
            run.gap += 1
            if run.gap > options.gap_tolerance:
                expired.append(key)
        for key in expired:
            close_run(open_runs.pop(key), censored=1)

    for run in open_runs.values():
        close_run(run, censored=1 if run.gap > 0 else 0)

    records.sort(
        key=lambda r: (
            r.key.file,
            r.key.entity_path,
            _RULE_ORDER[r.key.rule],
            r.key.ordinal,
            r.first_date,
        )
    )
    return records


def assign_timeframes(
    records: list[SurvivalRecord],
    history: History,
) -> tuple[list[SurvivalRecord], list[SurvivalRecord]]:
    """Split records at the temporal midpoint into two sub-study views.

    View 1 holds records born before the split, re-censored as if the study
    ended there: a removal observed after the split (or never) becomes
    censored=0 with duration measured to the split. View 2 holds records
    born at or after the split, unchanged.
    """
    split = split_instant(history)
    view1 = []
    view2 = []
    for record in records:
        if record.first_date >= split:
            view2.append(replace(record, timeframe=2))
            continue
        if record.censored == 1 and record.end_date is not None and record.end_date <= split:
            view1.append(replace(record, timeframe=1))
        else:
            view1.append(
                replace(
                    record,
                    timeframe=1,
                    censored=0,
                    end_date=None,
                    duration_days=_days_between(record.first_date, split),
                )
            )
    return view1, view2
