"""Command-line front end.

Subcommands:
  detect   evaluate the threshold rules over one code-model file
  analyze  full pipeline over a manifest: records, summaries, tests,
           density, anomalies, optional charts
  gate     CI check: fail when the latest transition shows a density
           increase anomaly

Exit codes: 0 success / gate passed, 1 error, 2 gate failed,
3 insufficient history for gating.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .anomaly import AnomalyThresholds, density_series, flag_anomalies
from .errors import ManifestError, ReportParseError, SmellSurvError
from .ingest import load_manifests
from .report import (
    FORMATS,
    analyze_history,
    fmt_rate,
    occurrences_csv,
    occurrences_json,
    write_atomic,
    write_bundle,
)
from .rules import default_ruleset, evaluate_rules, load_code_model, load_ruleset
from .tracking import TrackingOptions

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GATE_FAILED = 2
EXIT_INSUFFICIENT_HISTORY = 3


def _error_record(exc: BaseException) -> str:
    doc: dict = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ManifestError) and exc.row is not None:
        doc["row"] = exc.row
    if isinstance(exc, ReportParseError) and exc.byte_offset is not None:
        doc["byte_offset"] = exc.byte_offset
    return json.dumps(doc, sort_keys=True)


def _parse_formats(raw: str) -> set[str]:
    formats = {part.strip() for part in raw.split(",") if part.strip()}
    unknown = formats - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown output formats: {', '.join(sorted(unknown))}")
    if not formats:
        raise ValueError("at least one output format is required")
    return formats


def _ruleset(args) -> list:
    return load_ruleset(args.rules) if args.rules else default_ruleset()


def _thresholds(args) -> AnomalyThresholds:
    return AnomalyThresholds(up=args.up, up2=args.up2, down=args.down)


def cmd_detect(args) -> int:
    entities = load_code_model(args.code_model)
    occurrences = evaluate_rules(entities, _ruleset(args), args.version_id)
    formats = _parse_formats(args.formats)
    out_dir = Path(args.out)
    if "csv" in formats:
        write_atomic(out_dir / "occurrences.csv", occurrences_csv(occurrences))
    if "json" in formats:
        write_atomic(out_dir / "occurrences.json", occurrences_json(occurrences))
    print(f"{args.version_id}: {len(occurrences)} occurrences -> {out_dir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    formats = _parse_formats(args.formats)
    rules = _ruleset(args)
    options = TrackingOptions(gap_tolerance=args.gap_tolerance, rename_heuristic=args.rename_heuristic)
    thresholds = _thresholds(args)
    manifest_path = Path(args.manifest)
    histories = load_manifests(
        manifest_path.read_text(encoding="utf-8"),
        base_dir=manifest_path.parent,
        rules=rules,
        strip_prefix=args.strip_prefix,
    )
    if not histories:
        raise ManifestError("manifest names no versions")
    out_dir = Path(args.out)
    for history in sorted(histories, key=lambda h: h.app_name):
        bundle = analyze_history(history, options, thresholds)
        written = write_bundle(bundle, history, out_dir, thresholds, formats)
        print(f"{history.app_name}: {len(bundle.records)} records, {len(written)} files -> {out_dir / history.app_name}")
    return EXIT_OK


def cmd_gate(args) -> int:
    thresholds = _thresholds(args)
    manifest_path = Path(args.manifest)
    histories = load_manifests(
        manifest_path.read_text(encoding="utf-8"),
        base_dir=manifest_path.parent,
        strip_prefix=args.strip_prefix,
    )
    if not histories:
        raise ManifestError("manifest names no versions")

    short_histories = [h.app_name for h in histories if len(h.snapshots) < 2]
    if short_histories:
        print(f"insufficient history (need >= 2 versions): {', '.join(sorted(short_histories))}")
        return EXIT_INSUFFICIENT_HISTORY

    failed = False
    for history in sorted(histories, key=lambda h: h.app_name):
        series = density_series(history)
        latest = series[-1]
        latest_flags = [
            f for f in flag_anomalies(series, thresholds) if f.version_id == latest.version_id
        ]
        increases = [f for f in latest_flags if f.kind.value.startswith("increase")]
        verdict = "FAIL" if increases else "ok"
        print(
            f"{history.app_name} {latest.version_id}: delta_rho={fmt_rate(latest.delta_rho)} "
            f"[{verdict}]"
            + ("".join(f" {f.kind.value}" for f in latest_flags) if latest_flags else "")
        )
        if increases:
            failed = True
    return EXIT_GATE_FAILED if failed else EXIT_OK


def _add_threshold_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--up", type=float, default=0.5, help="increase threshold (default 0.5)")
    parser.add_argument("--up2", type=float, default=1.0, help="strong increase threshold (default 1.0)")
    parser.add_argument("--down", type=float, default=-0.5, help="decrease threshold (default -0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smellsurv",
        description="Code-smell evolution analytics: detection, survival, anomalies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="evaluate threshold rules over a code-model file")
    detect.add_argument("--code-model", required=True, help="code-model JSON file")
    detect.add_argument("--version-id", required=True, help="version label for the occurrences")
    detect.add_argument("--rules", help="JSON file with threshold overrides")
    detect.add_argument("--formats", default="csv,json", help="comma-separated: csv,json")
    detect.add_argument("--out", default="out", help="output directory (default: out)")
    detect.set_defaults(func=cmd_detect)

    analyze = sub.add_parser("analyze", help="full pipeline over a version manifest")
    analyze.add_argument("--manifest", required=True, help="manifest CSV path")
    analyze.add_argument("--rules", help="JSON file with threshold overrides")
    analyze.add_argument("--gap-tolerance", type=int, default=0, help="versions of absence to bridge")
    analyze.add_argument(
        "--rename-heuristic", action="store_true", help="re-join removal+addition pairs that look like renames"
    )
    analyze.add_argument("--formats", default="csv,json", help="comma-separated: csv,json,svg")
    analyze.add_argument("--out", default="out", help="output directory (default: out)")
    analyze.add_argument("--strip-prefix", help="path prefix to strip from report file names")
    _add_threshold_flags(analyze)
    analyze.set_defaults(func=cmd_analyze)

    gate = sub.add_parser("gate", help="fail when the latest transition shows a density increase")
    gate.add_argument("--manifest", required=True, help="manifest CSV path")
    gate.add_argument("--strip-prefix", help="path prefix to strip from report file names")
    _add_threshold_flags(gate)
    gate.set_defaults(func=cmd_gate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SmellSurvError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
