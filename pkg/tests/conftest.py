from __future__ import annotations

from datetime import datetime, timedelta, timezone

from smellsurv.ingest import History, SizeMetrics, VersionSnapshot
from smellsurv.rules import RuleId, Scope, SmellOccurrence
from smellsurv.tracking import InstanceKey, SurvivalRecord

BASE = datetime(2015, 1, 1, tzinfo=timezone.utc)


def ts(day: float) -> datetime:
    return BASE + timedelta(days=day)


def occurrence(
    rule: RuleId = RuleId.EXCESSIVE_METHOD_LENGTH,
    file: str = "src/a.php",
    entity_path: str = "A/m",
    version_id: str = "v1",
    begin_line: int | None = None,
    end_line: int | None = None,
) -> SmellOccurrence:
    return SmellOccurrence(
        rule=rule,
        file=file,
        entity_path=entity_path,
        version_id=version_id,
        begin_line=begin_line,
        end_line=end_line,
    )


_record_counter = iter(range(10**9))


def record(
    duration: float,
    event: bool,
    scope: Scope = Scope.LOCALIZED,
    timeframe: int = 1,
) -> SurvivalRecord:
    """Bare survival record for feeding the statistics layer directly."""
    i = next(_record_counter)
    rule = RuleId.EXCESSIVE_METHOD_LENGTH if scope is Scope.LOCALIZED else RuleId.DEPTH_OF_INHERITANCE
    return SurvivalRecord(
        key=InstanceKey(rule, f"f{i}.php", f"e{i}", 0),
        scope=scope,
        first_version="v1",
        first_date=ts(0),
        last_present_version="v?",
        end_date=ts(duration) if event else None,
        censored=1 if event else 0,
        duration_days=float(duration),
        timeframe=timeframe,
    )


def history_from_bits(
    bits_by_key: dict[str, str],
    days: list[float] | None = None,
    app: str = "synthetic",
    lloc: int = 10_000,
    rule: RuleId = RuleId.EXCESSIVE_METHOD_LENGTH,
) -> History:
    """History in which key k (used as the entity path) is present in
    version i exactly when bits_by_key[k][i] == '1'."""
    n_versions = len(next(iter(bits_by_key.values())))
    if days is None:
        days = [float(30 * i) for i in range(n_versions)]
    snapshots = []
    for i in range(n_versions):
        version_id = f"v{i + 1}"
        occurrences = tuple(
            occurrence(rule=rule, entity_path=key, version_id=version_id)
            for key, bits in sorted(bits_by_key.items())
            if bits[i] == "1"
        )
        snapshots.append(
            VersionSnapshot(
                version_id=version_id,
                timestamp=ts(days[i]),
                occurrences=occurrences,
                size=SizeMetrics(lloc=lloc),
            )
        )
    return History(app_name=app, snapshots=tuple(snapshots))
