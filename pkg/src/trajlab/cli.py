"""Command-line front door.

Machine-readable output (CSV by default, ``--json`` to switch) goes to
stdout; diagnostics go to stderr.  Exit codes: 0 success, 1 validation
rejection or operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import dact
from .aggregation import (
    MergeError,
    ThresholdProfile,
    decision_from_dict,
    detect_candidates,
    merge_layers,
    profile_by_name,
)
from .agreement import DEFAULT_TAU_SWEEP, PHASES, AgreementError, report_csv, tau_sweep
from .autoann import AutoAnnConfig, run_autoann
from .config import ConfigError, load_kv_file
from .model import ValidationError
from .store import DATA_DIR_ENV, AnnotationStore, StoreError


class CliError(Exception):
    """Operational failure; message goes to stderr, exit code 1."""


def _collect_csv_paths(paths: list[str]) -> list[Path]:
    out: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        elif p.is_file():
            out.append(p)
        else:
            raise CliError(f"no such file or directory: {raw}")
    if not out:
        raise CliError("no CSV files found")
    return out


def _parse_sources(paths: list[str]) -> dact.DactParseResult:
    trajectories, layers, reports = [], [], []
    for path in _collect_csv_paths(paths):
        try:
            result = dact.parse_dact(path.read_text(encoding="utf-8"))
        except dact.DactFormatError as exc:
            raise CliError(f"{path}: {exc}") from exc
        trajectories.extend(result.trajectories)
        layers.extend(result.layers)
        reports.extend(result.reports)
    return dact.DactParseResult(tuple(trajectories), tuple(layers), tuple(reports))


def _csv_out(rows: list[list], header: list[str]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def _autoann_config(args: argparse.Namespace) -> AutoAnnConfig:
    config = AutoAnnConfig()
    if args.config:
        config = AutoAnnConfig.from_mapping(load_kv_file(args.config))
    overrides = {
        "k": args.k,
        "low_speed_threshold": args.low_speed_threshold,
        "turn_threshold": args.turn_threshold,
        "loop_radius": args.loop_radius,
        "loop_min_speed": args.loop_min_speed,
    }
    overrides = {name: value for name, value in overrides.items() if value is not None}
    if args.loop_enabled:
        overrides["loop_enabled"] = True
    return replace(config, **overrides) if overrides else config


def _threshold_profile(args: argparse.Namespace) -> ThresholdProfile:
    if args.config:
        return ThresholdProfile.from_mapping(load_kv_file(args.config))
    return profile_by_name(args.profile)


def _cmd_validate(args: argparse.Namespace) -> int:
    result = _parse_sources(args.paths)
    rejected = False
    if args.json:
        docs = []
        for report in result.reports:
            rejected |= not report.accepted
            docs.append(
                {
                    "trip_id": report.trip_id,
                    "verdict": report.verdict,
                    "issues": [
                        {"row": i.row, "rule": i.rule, "message": i.message, "fatal": i.fatal}
                        for i in report.issues
                    ],
                }
            )
        print(json.dumps(docs, indent=2))
    else:
        rows = []
        for report in result.reports:
            rejected |= not report.accepted
            rows.append([report.trip_id, report.verdict, len(report.issues)])
            for issue in report.issues:
                print(
                    f"{report.trip_id}: row {issue.row}: [{issue.rule}] {issue.message}",
                    file=sys.stderr,
                )
        print(_csv_out(rows, ["trip_id", "verdict", "issues"]), end="")
    return 1 if rejected else 0


def _accepted_trajectories(result: dact.DactParseResult):
    for trajectory, report in zip(result.trajectories, result.reports):
        if report.accepted:
            yield trajectory
        else:
            print(
                f"skipping rejected trip {trajectory.trip_id!r} "
                f"({report.issues[0].message})",
                file=sys.stderr,
            )


def _cmd_autoann(args: argparse.Namespace) -> int:
    config = _autoann_config(args)
    result = _parse_sources(args.paths)
    docs = []
    rows = []
    for trajectory in _accepted_trajectories(result):
        ann = run_autoann(trajectory, config)
        histogram = {t.value: n for t, n in sorted(ann.type_histogram.items(), key=lambda kv: kv[0].value)}
        print(
            f"{trajectory.trip_id}: {ann.total_marks} marks, "
            f"{ann.total_typed} typed: {histogram}",
            file=sys.stderr,
        )
        if args.json:
            doc = dact.layer_to_dict(ann.layer)
            doc["histogram"] = histogram
            docs.append(doc)
        else:
            for mark in ann.layer.marks:
                rows.append(
                    [
                        trajectory.trip_id,
                        mark.time_step,
                        mark.annotation_type.value,
                        ";".join(t.value for t in mark.sorted_types()),
                    ]
                )
    if args.json:
        print(json.dumps(docs, indent=2))
    else:
        print(_csv_out(rows, ["trip_id", "time_step", "annotation_type", "segment_types"]), end="")
    return 0


def _cmd_candidates(args: argparse.Namespace) -> int:
    profile = _threshold_profile(args)
    result = _parse_sources(args.paths)
    rows = []
    docs = []
    for trajectory in _accepted_trajectories(result):
        candidates = detect_candidates(trajectory, profile)
        for c in candidates:
            types = ";".join(sorted(t.value for t in c.suggested_types))
            if args.json:
                docs.append(
                    {
                        "trip_id": trajectory.trip_id,
                        "id": c.candidate_id,
                        "kind": c.kind,
                        "begin": c.begin,
                        "end": c.end,
                        "suggested_types": types.split(";"),
                        "evidence": c.evidence,
                    }
                )
            else:
                rows.append([trajectory.trip_id, c.kind, c.begin, c.end, types, f"{c.evidence:g}"])
    if args.json:
        print(json.dumps(docs, indent=2))
    else:
        print(
            _csv_out(rows, ["trip_id", "kind", "begin", "end", "suggested_types", "evidence"]),
            end="",
        )
    return 0


def _parse_taus(raw: str) -> list[float]:
    try:
        taus = [float(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise CliError(f"--tau expects comma-separated numbers, got {raw!r}") from None
    if not taus:
        raise CliError("--tau lists no values")
    return taus


def _cmd_agreement(args: argparse.Namespace) -> int:
    taus = _parse_taus(args.tau) if args.tau else list(DEFAULT_TAU_SWEEP)
    store = AnnotationStore(args.corpus)
    for warning in store.load_warnings:
        print(warning, file=sys.stderr)
    dataset = store.agreement_dataset()
    sweep = tau_sweep(dataset, args.phase, sorted(taus))
    for _, report in sweep:
        for warning in report.warnings:
            print(f"tau={report.tau:g}: {warning}", file=sys.stderr)
    reports = [report for _, report in sweep]
    if args.json:
        docs = []
        for point, report in sweep:
            docs.append(
                {
                    "tau": point.tau,
                    "phase": report.phase,
                    "avg_kappa": point.avg_kappa,
                    "avg_overlap": point.avg_overlap,
                    "pairs": [
                        {
                            "trip_id": p.trip_id,
                            "author_a": p.author_a,
                            "author_b": p.author_b,
                            "a": p.counts.a,
                            "b": p.counts.b,
                            "c": p.counts.c,
                            "d": p.counts.d,
                            "kappa": p.kappa,
                            "overlap": p.overlap,
                        }
                        for p in report.pairs
                    ],
                }
            )
        print(json.dumps(docs, indent=2))
    else:
        print(report_csv(reports), end="")
    return 0


def _cmd_merge(args: argparse.Namespace) -> int:
    store = AnnotationStore(args.corpus)
    doc = json.loads(Path(args.decisions).read_text(encoding="utf-8"))
    entries = doc["decisions"] if isinstance(doc, dict) else doc
    decisions = [decision_from_dict(entry) for entry in entries]
    author = args.author or store.aggregator_author
    if args.write:
        layer = store.finalize(args.trip, args.phase, decisions, author=author)
    else:
        trajectory = store.trajectory(args.trip)
        autoann_result, candidates = store.suggestions(args.trip, args.phase)
        layers = store.trip_layers(args.trip) + [autoann_result.layer]
        layer = merge_layers(
            trajectory, layers, decisions, candidates=candidates, author=author
        )
    out = dact.layer_to_dict(layer)
    out["phase"] = args.phase
    print(json.dumps(out, indent=2))
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    store = AnnotationStore(args.corpus)
    trips = args.trips or sorted(store.trajectories)
    items = []
    for trip_id in trips:
        trajectory = store.trajectory(trip_id)
        layer = None
        if args.phase:
            layer = store.finalized.get((trip_id, args.phase))
            if layer is None:
                print(f"{trip_id}: no finalized {args.phase} layer, exporting bare", file=sys.stderr)
        elif args.author:
            layer = store.layers.get((trip_id, args.author))
            if layer is None:
                print(f"{trip_id}: no layer by {args.author!r}, exporting bare", file=sys.stderr)
        items.append((trajectory, layer))
    print(dact.write_dact_corpus(items), end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data_dir or None
    if data_dir is None:
        import os

        data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir is None:
        raise CliError(f"--data-dir or {DATA_DIR_ENV} is required")
    store = AnnotationStore(data_dir)
    for warning in store.load_warnings:
        print(warning, file=sys.stderr)
    uvicorn.run(create_app(store), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajlab",
        description="Segment-level annotation toolkit for per-second car trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse DACT CSVs and report data-quality verdicts")
    p.add_argument("paths", nargs="+", help="CSV files or directories")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("autoann", help="run the heuristic annotator over DACT CSVs")
    p.add_argument("paths", nargs="+")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--k", type=int)
    p.add_argument("--low-speed-threshold", type=float, dest="low_speed_threshold")
    p.add_argument("--turn-threshold", type=float, dest="turn_threshold")
    p.add_argument("--loop-radius", type=float, dest="loop_radius")
    p.add_argument("--loop-min-speed", type=float, dest="loop_min_speed")
    p.add_argument("--loop-enabled", action="store_true", dest="loop_enabled")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_autoann)

    p = sub.add_parser("candidates", help="detect strict/easy threshold candidates")
    p.add_argument("paths", nargs="+")
    p.add_argument("--profile", choices=["strict", "easy"], default="strict")
    p.add_argument("--config", help="flat key=value profile file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_candidates)

    p = sub.add_parser("agreement", help="inter-annotator agreement report over a corpus")
    p.add_argument("corpus", help="data directory (CSVs + layers/ + finalized/)")
    p.add_argument("--phase", choices=list(PHASES), required=True)
    p.add_argument("--tau", help="comma-separated thresholds in meters")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_agreement)

    p = sub.add_parser("merge", help="apply aggregator decisions into a finalized layer")
    p.add_argument("corpus")
    p.add_argument("--trip", required=True)
    p.add_argument("--decisions", required=True, help="JSON decisions document")
    p.add_argument("--phase", choices=["strict", "easy"], default="strict")
    p.add_argument("--author")
    p.add_argument("--write", action="store_true", help="persist into finalized/")
    p.set_defaults(fn=_cmd_merge)

    p = sub.add_parser("export", help="write DACT CSV for stored trips")
    p.add_argument("corpus")
    p.add_argument("trips", nargs="*")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--phase", choices=["strict", "easy"])
    group.add_argument("--author")
    p.set_defaults(fn=_cmd_export)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", dest="data_dir")
    p.set_defaults(fn=_cmd_serve)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        ValidationError,
        ConfigError,
        StoreError,
        MergeError,
        AgreementError,
        dact.DactFormatError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
