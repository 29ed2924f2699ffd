"""Emitters for the analysis outputs: tables (CSV), machine-readable
summaries (JSON), and optional SVG charts.

All writers are deterministic: fixed orderings, fixed number formatting
(two decimals for day values, six significant digits for probabilities and
rates), and atomic write-then-rename file creation.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from . import svgplot
from .anomaly import (
    AnomalyFlag,
    AnomalyThresholds,
    ChangeRates,
    DensityPoint,
    density_series,
    flag_anomalies,
    metric_change_rates,
)
from .ingest import History
from .rules import RuleId, SmellOccurrence, scope_of
from .survival import (
    GroupComparison,
    GroupSummary,
    SurvivalCurve,
    compare_groups,
    kaplan_meier,
    summarize,
)
from .tracking import (
    SurvivalRecord,
    TrackingOptions,
    assign_timeframes,
    build_survival_records,
    split_instant,
)

FORMATS = ("csv", "json", "svg")


def fmt_days(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def fmt_prob(value: float) -> str:
    return f"{value:.6g}"


def fmt_rate(value: float | None) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf"
    return f"{value:.6g}"


def round_days(value: float | None) -> float | None:
    return None if value is None else round(value, 2)


def round_prob(value: float) -> float:
    return float(f"{value:.6g}")


def json_rate(value: float | None) -> float | str | None:
    if value is None:
        return None
    if math.isinf(value):
        return "inf"
    return round_prob(value)


def write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(content, encoding="utf-8", newline="")
    os.replace(tmp, path)


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _json_line(doc) -> str:
    return json.dumps(doc, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# occurrence documents (detect subcommand)
# ---------------------------------------------------------------------------

OCCURRENCE_HEADER = ["version", "rule", "scope", "file", "entity_path", "begin_line", "end_line"]


def occurrences_csv(occurrences: list[SmellOccurrence]) -> str:
    rows = [
        [
            occ.version_id,
            occ.rule.value,
            scope_of(occ.rule).value,
            occ.file,
            occ.entity_path,
            "" if occ.begin_line is None else str(occ.begin_line),
            "" if occ.end_line is None else str(occ.end_line),
        ]
        for occ in occurrences
    ]
    return _csv_text(OCCURRENCE_HEADER, rows)


def occurrences_json(occurrences: list[SmellOccurrence]) -> str:
    return _json_text(
        [
            {
                "version": occ.version_id,
                "rule": occ.rule.value,
                "scope": scope_of(occ.rule).value,
                "file": occ.file,
                "entity_path": occ.entity_path,
                "begin_line": occ.begin_line,
                "end_line": occ.end_line,
            }
            for occ in occurrences
        ]
    )


# ---------------------------------------------------------------------------
# survival records and summaries
# ---------------------------------------------------------------------------

RECORDS_HEADER = [
    "app",
    "rule",
    "scope",
    "key",
    "first_version",
    "first_date",
    "last_present_version",
    "end_date",
    "censored",
    "duration_days",
    "timeframe",
]


def records_csv(app: str, records: list[SurvivalRecord]) -> str:
    rows = [
        [
            app,
            r.key.rule.value,
            r.scope.value,
            r.key.location(),
            r.first_version,
            r.first_date.isoformat(),
            r.last_present_version,
            "" if r.end_date is None else r.end_date.isoformat(),
            str(r.censored),
            fmt_days(r.duration_days),
            str(r.timeframe),
        ]
        for r in records
    ]
    return _csv_text(RECORDS_HEADER, rows)


def lifelines_csv(records: list[SurvivalRecord]) -> str:
    rows = [
        [
            r.key.rule.value,
            r.key.location(),
            r.first_date.isoformat(),
            "" if r.end_date is None else r.end_date.isoformat(),
        ]
        for r in records
    ]
    return _csv_text(["rule", "key", "first_date", "end_date"], rows)


SUMMARY_HEADER = ["group", "found", "removed", "pct_removed", "median_days", "rmean_days", "se_rmean"]


def _summary_row(label: str, summary: GroupSummary | None) -> list[str]:
    if summary is None:  # degenerate group: no data to summarize
        return [label, "0", "0", "", "", "", ""]
    return [
        label,
        str(summary.found),
        str(summary.removed),
        fmt_prob(summary.pct_removed),
        fmt_days(summary.median_days),
        fmt_days(summary.rmean_days),
        fmt_days(summary.se_rmean),
    ]


def _summary_json(summary: GroupSummary | None):
    if summary is None:
        return {"found": 0, "removed": 0, "no_data": True}
    return {
        "found": summary.found,
        "removed": summary.removed,
        "pct_removed": round_prob(summary.pct_removed),
        "median_days": round_days(summary.median_days),
        "rmean_days": round_days(summary.rmean_days),
        "se_rmean": round_days(summary.se_rmean),
    }


def curve_csv(curve: SurvivalCurve) -> str:
    rows = [
        [fmt_days(p.time_days), str(p.n_at_risk), str(p.n_events), fmt_prob(p.survival)]
        for p in curve.points
    ]
    return _csv_text(["time_days", "n_at_risk", "n_events", "survival"], rows)


def grouped_curves_csv(curves: list[tuple[str, SurvivalCurve]]) -> str:
    rows = [
        [label, fmt_days(p.time_days), str(p.n_at_risk), str(p.n_events), fmt_prob(p.survival)]
        for label, curve in curves
        for p in curve.points
    ]
    return _csv_text(["group", "time_days", "n_at_risk", "n_events", "survival"], rows)


def logrank_json_line(comparison: GroupComparison | None, error: str | None = None) -> str:
    if comparison is None:
        return _json_line({"error": error or "test not performed"})
    doc = {
        "statistic": round_prob(comparison.test.statistic),
        "p_value": round_prob(comparison.test.p_value),
    }
    if comparison.test.warning:
        doc["warning"] = comparison.test.warning
    return _json_line(doc)


# ---------------------------------------------------------------------------
# per-version tables
# ---------------------------------------------------------------------------

def counts_by_rule_csv(history: History) -> str:
    rows = []
    for snap in history.snapshots:
        counts = {rid: 0 for rid in RuleId}
        for occ in snap.occurrences:
            counts[occ.rule] += 1
        for rid in RuleId:
            rows.append([snap.version_id, snap.timestamp.isoformat(), rid.value, str(counts[rid])])
    return _csv_text(["version", "timestamp", "rule", "count"], rows)


def density_csv(series: list[DensityPoint]) -> str:
    rows = [
        [
            p.version_id,
            p.timestamp.isoformat(),
            str(p.cs_count),
            str(p.lloc),
            fmt_rate(p.rho),
            fmt_rate(p.delta_cs),
            fmt_rate(p.delta_lloc),
            fmt_rate(p.delta_rho),
        ]
        for p in series
    ]
    return _csv_text(
        ["version", "timestamp", "cs_count", "lloc", "rho", "delta_cs", "delta_lloc", "delta_rho"],
        rows,
    )


def anomalies_csv(flags: list[AnomalyFlag]) -> str:
    rows = [[f.version_id, f.kind.value, fmt_rate(f.delta_rho)] for f in flags]
    return _csv_text(["version", "kind", "delta_rho"], rows)


def anomaly_report_json(
    app: str,
    series: list[DensityPoint],
    flags: list[AnomalyFlag],
    thresholds: AnomalyThresholds,
) -> str:
    return _json_text(
        {
            "app": app,
            "thresholds": {"up": thresholds.up, "up2": thresholds.up2, "down": thresholds.down},
            "density": [
                {
                    "version": p.version_id,
                    "timestamp": p.timestamp.isoformat(),
                    "cs_count": p.cs_count,
                    "lloc": p.lloc,
                    "rho": json_rate(p.rho),
                    "delta_cs": json_rate(p.delta_cs),
                    "delta_lloc": json_rate(p.delta_lloc),
                    "delta_rho": json_rate(p.delta_rho),
                }
                for p in series
            ],
            "flags": [
                {"version": f.version_id, "kind": f.kind.value, "delta_rho": json_rate(f.delta_rho)}
                for f in flags
            ],
        }
    )


def change_rates_json(rates: ChangeRates):
    return {
        "d_loc": json_rate(rates.d_loc),
        "d_lloc": json_rate(rates.d_lloc),
        "d_classes": json_rate(rates.d_classes),
    }


# ---------------------------------------------------------------------------
# the analyze bundle
# ---------------------------------------------------------------------------

@dataclass
class AnalysisBundle:
    """Everything cmd_analyze derives from one application's history."""

    app: str
    records: list[SurvivalRecord]
    view1: list[SurvivalRecord]
    view2: list[SurvivalRecord]
    series: list[DensityPoint]
    flags: list[AnomalyFlag]
    rates: ChangeRates
    scope_comparison: GroupComparison | None
    scope_error: str | None
    timeframe_comparison: GroupComparison | None
    timeframe_error: str | None


def analyze_history(
    history: History,
    options: TrackingOptions | None = None,
    thresholds: AnomalyThresholds | None = None,
) -> AnalysisBundle:
    if thresholds is None:
        thresholds = AnomalyThresholds()
    records = build_survival_records(history, options)
    view1, view2 = assign_timeframes(records, history)
    series = density_series(history)
    flags = flag_anomalies(series, thresholds)
    rates = metric_change_rates(history)

    scope_comparison = scope_error = None
    timeframe_comparison = timeframe_error = None
    try:
        scope_comparison = compare_groups(records, "scope")
    except ValueError as exc:
        scope_error = str(exc)
    try:
        timeframe_comparison = compare_groups(view1 + view2, "timeframe")
    except ValueError as exc:
        timeframe_error = str(exc)
    return AnalysisBundle(
        app=history.app_name,
        records=records,
        view1=view1,
        view2=view2,
        series=series,
        flags=flags,
        rates=rates,
        scope_comparison=scope_comparison,
        scope_error=scope_error,
        timeframe_comparison=timeframe_comparison,
        timeframe_error=timeframe_error,
    )


def _comparison_rows(
    comparison: GroupComparison | None,
    labels: tuple[str, str],
    groups: dict[str, list[SurvivalRecord]],
) -> list[list[str]]:
    rows = []
    for label in labels:
        if comparison is not None:
            rows.append(_summary_row(label, comparison.summaries[label]))
        else:
            group = groups.get(label) or []
            rows.append(_summary_row(label, summarize(group) if group else None))
    return rows


def _grouped_curves(
    labels: tuple[str, str],
    groups: dict[str, list[SurvivalRecord]],
) -> list[tuple[str, SurvivalCurve]]:
    return [(label, kaplan_meier(groups[label])) for label in labels if groups.get(label)]


def write_bundle(
    bundle: AnalysisBundle,
    history: History,
    out_dir: Path,
    thresholds: AnomalyThresholds,
    formats: set[str],
) -> list[Path]:
    """Write one application's output files under out_dir/<app>/."""
    app_dir = Path(out_dir) / bundle.app
    written: list[Path] = []

    def emit(name: str, content: str) -> None:
        path = app_dir / name
        write_atomic(path, content)
        written.append(path)

    scope_groups = {
        "localized": [r for r in bundle.records if r.scope.value == "localized"],
        "scattered": [r for r in bundle.records if r.scope.value == "scattered"],
    }
    timeframe_groups = {"1": bundle.view1, "2": bundle.view2}

    if "csv" in formats:
        emit("records.csv", records_csv(bundle.app, bundle.records))
        emit("lifelines.csv", lifelines_csv(bundle.records))
        emit("counts_by_rule.csv", counts_by_rule_csv(history))
        emit("density.csv", density_csv(bundle.series))
        emit("anomalies.csv", anomalies_csv(bundle.flags))
        emit(
            "summary_scope.csv",
            _csv_text(
                SUMMARY_HEADER,
                _comparison_rows(bundle.scope_comparison, ("localized", "scattered"), scope_groups),
            ),
        )
        emit(
            "summary_timeframe.csv",
            _csv_text(
                SUMMARY_HEADER,
                _comparison_rows(bundle.timeframe_comparison, ("1", "2"), timeframe_groups),
            ),
        )
        if bundle.records:
            emit("km_all.csv", curve_csv(kaplan_meier(bundle.records)))
        else:
            emit("km_all.csv", _csv_text(["time_days", "n_at_risk", "n_events", "survival"], []))
        emit("km_scope.csv", grouped_curves_csv(_grouped_curves(("localized", "scattered"), scope_groups)))
        emit("km_timeframe.csv", grouped_curves_csv(_grouped_curves(("1", "2"), timeframe_groups)))
        emit("logrank_scope.json", logrank_json_line(bundle.scope_comparison, bundle.scope_error))
        emit(
            "logrank_timeframe.json",
            logrank_json_line(bundle.timeframe_comparison, bundle.timeframe_error),
        )

    if "json" in formats:
        emit("anomalies.json", anomaly_report_json(bundle.app, bundle.series, bundle.flags, thresholds))
        emit("bundle.json", _bundle_json(bundle, history))

    if "svg" in formats:
        for name, labels, groups in (
            ("km_scope.svg", ("localized", "scattered"), scope_groups),
            ("km_timeframe.svg", ("1", "2"), timeframe_groups),
        ):
            curves = _grouped_curves(labels, groups)
            series = [
                (label, [(p.time_days, p.survival) for p in curve.points])
                for label, curve in curves
            ]
            emit(name, svgplot.step_chart(series, f"{bundle.app}: survival by {name.split('_')[1].split('.')[0]}"))
        origin = history.snapshots[0].timestamp
        segments = sorted(
            (
                (r.first_date - origin).total_seconds() / 86400.0,
                (r.first_date - origin).total_seconds() / 86400.0 + r.duration_days,
                r.censored == 0,
            )
            for r in bundle.records
        )
        emit("lifelines.svg", svgplot.lifeline_chart(segments, f"{bundle.app}: smell lifelines"))
        points = [
            (float(i), p.delta_rho)
            for i, p in enumerate(bundle.series)
        ]
        guides = [
            (thresholds.up, f"+{thresholds.up:.0%}"),
            (thresholds.up2, f"+{thresholds.up2:.0%}"),
            (thresholds.down, f"{thresholds.down:.0%}"),
        ]
        emit("density.svg", svgplot.threshold_chart(points, guides, f"{bundle.app}: smell density change"))

    return written


def _bundle_json(bundle: AnalysisBundle, history: History) -> str:
    def comparison_doc(comparison: GroupComparison | None, error: str | None, labels, groups):
        doc: dict = {"summaries": {}}
        for label in labels:
            if comparison is not None:
                doc["summaries"][label] = _summary_json(comparison.summaries[label])
            else:
                group = groups.get(label) or []
                doc["summaries"][label] = _summary_json(summarize(group) if group else None)
        if comparison is not None:
            doc["logrank"] = {
                "statistic": round_prob(comparison.test.statistic),
                "p_value": round_prob(comparison.test.p_value),
            }
            if comparison.test.warning:
                doc["logrank"]["warning"] = comparison.test.warning
        else:
            doc["logrank"] = {"error": error or "test not performed"}
        return doc

    scope_groups = {
        "localized": [r for r in bundle.records if r.scope.value == "localized"],
        "scattered": [r for r in bundle.records if r.scope.value == "scattered"],
    }
    timeframe_groups = {"1": bundle.view1, "2": bundle.view2}
    doc = {
        "app": bundle.app,
        "versions": len(history.snapshots),
        "observation": {
            "start": history.snapshots[0].timestamp.isoformat(),
            "end": history.snapshots[-1].timestamp.isoformat(),
            "split_instant": split_instant(history).isoformat(),
        },
        "records": len(bundle.records),
        "scope": comparison_doc(
            bundle.scope_comparison, bundle.scope_error, ("localized", "scattered"), scope_groups
        ),
        "timeframe": comparison_doc(
            bundle.timeframe_comparison, bundle.timeframe_error, ("1", "2"), timeframe_groups
        ),
        "metric_change_rates": change_rates_json(bundle.rates),
        "anomaly_flags": [
            {"version": f.version_id, "kind": f.kind.value, "delta_rho": json_rate(f.delta_rho)}
            for f in bundle.flags
        ],
    }
    return _json_text(doc)
