#!/usr/bin/env python3
"""Corpus-level report: validation verdicts, heuristic-annotator totals,
and segment-type shares compared against the published reference mix.

Usage:
    python3 scripts/corpus_report.py DATA_DIR [--k 5] [--low-speed-threshold 9]
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trajlab.autoann import AutoAnnConfig, run_autoann
from trajlab.dact import parse_dact
from trajlab.model import SegmentType

REFERENCE_TOTAL = 2418
REFERENCE_SHARES = {
    SegmentType.SPEED_UP: 0.10,
    SegmentType.SLOW_DOWN: 0.59,
    SegmentType.TRAFFIC_JAM: 0.06,
    SegmentType.TRAFFIC_LIGHT: 0.20,
    SegmentType.TURN: 0.05,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("data_dir", type=Path)
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--low-speed-threshold", type=float, default=9.0)
    parser.add_argument("--turn-threshold", type=float, default=15.0)
    args = parser.parse_args()

    config = AutoAnnConfig(
        k=args.k,
        low_speed_threshold=args.low_speed_threshold,
        turn_threshold=args.turn_threshold,
    )
    files = sorted(args.data_dir.glob("*.csv"))
    if not files:
        print(f"no CSV files under {args.data_dir}", file=sys.stderr)
        return 1

    trips = {}
    rejected = 0
    for path in files:
        result = parse_dact(path.read_text(encoding="utf-8"))
        for trajectory, report in zip(result.trajectories, result.reports):
            if report.accepted:
                trips[trajectory.trip_id] = trajectory
            else:
                rejected += 1
                print(f"reject {trajectory.trip_id}: {report.issues[0].message}")
    print(f"{len(trips)} trips accepted, {rejected} rejected, {len(files)} file(s)")

    histogram: Counter[SegmentType] = Counter()
    total_marks = 0
    for trajectory in trips.values():
        result = run_autoann(trajectory, config)
        total_marks += result.total_marks
        histogram.update(result.type_histogram)
    typed = sum(histogram.values())
    print(f"\nautoann: {total_marks} marks ({typed} typed), reference total {REFERENCE_TOTAL}")
    print(f"{'type':<15}{'count':>8}{'share':>9}{'reference':>11}")
    for seg, reference in REFERENCE_SHARES.items():
        share = histogram.get(seg, 0) / typed if typed else 0.0
        print(f"{seg.value:<15}{histogram.get(seg, 0):>8}{share:>8.1%}{reference:>10.0%}")
    others = typed - sum(histogram.get(s, 0) for s in REFERENCE_SHARES)
    if others:
        print(f"{'(other types)':<15}{others:>8}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
