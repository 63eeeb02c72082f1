#!/usr/bin/env python3
"""Capture the annotation service's fixture-corpus responses as JSON.

The portal's automated tests replay these documents through an in-process
fake of the HTTP API, so the front end is exercised against byte-for-byte
real service output without needing a running Python server.

Writes frontend/tests/fixtures/corpus.json.
"""

from __future__ import annotations

import json
import math
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fastapi.testclient import TestClient

from trajlab.dact import write_dact_corpus
from trajlab.model import AnnotationType, SegmentType, Trajectory, TrajectoryPoint
from trajlab.service import create_app
from trajlab.store import AnnotationStore

M_PER_DEG = 6_371_000.0 * math.pi / 180.0
BASE_UTC = datetime(2017, 6, 1, 16, 0, 0, tzinfo=timezone.utc)


def straight_trip(trip_id: str, speeds: list[float], spacing_m: float = 20.0) -> Trajectory:
    points = []
    for i, speed in enumerate(speeds):
        accel = 0.0 if i == 0 else (speeds[i] - speeds[i - 1]) * 0.44704
        points.append(
            TrajectoryPoint(
                time_step=i + 1,
                timestamp=BASE_UTC + timedelta(seconds=i),
                speed=speed,
                acceleration=accel,
                heading=0.0,
                heading_change=0.0,
                latitude=39.96 + i * spacing_m / M_PER_DEG,
                longitude=-83.0,
            )
        )
    return Trajectory(trip_id, tuple(points))


def main() -> int:
    dest = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"
    dest.mkdir(parents=True, exist_ok=True)

    data_dir = dest / "_build"
    data_dir.mkdir(exist_ok=True)
    slowdown = [20.0, 18, 16, 14, 12, 10, 12, 14, 16, 18, 20, 22, 24]
    trips = [
        straight_trip("T-1", [30.0 + (i % 7) for i in range(60)]),
        straight_trip("T-2", slowdown),
    ]
    (data_dir / "trips.csv").write_text(write_dact_corpus([(t, None) for t in trips]))

    store = AnnotationStore(data_dir)
    store.record_mark("alice", "T-1", 10, AnnotationType.SEGMENT, {SegmentType.TURN})
    store.record_mark("alice", "T-1", 40, AnnotationType.SEGMENT, {SegmentType.EXIT})
    store.record_mark("bob", "T-1", 12, AnnotationType.MAYBE_SEGMENT, {SegmentType.TURN})
    store.record_mark("bob", "T-1", 45, AnnotationType.SEGMENT, {SegmentType.MERGE})

    client = TestClient(create_app(store))
    trip_ids = [t.trip_id for t in trips]
    corpus = {
        "trips": client.get("/trips").json(),
        "points": {t: client.get(f"/trips/{t}").json() for t in trip_ids},
        "layers": {t: client.get(f"/trips/{t}/layers").json() for t in trip_ids},
        "suggestions": {
            t: {
                profile: client.get(
                    f"/trips/{t}/suggestions", params={"profile": profile}
                ).json()
                for profile in ("strict", "easy")
            }
            for t in trip_ids
        },
    }
    out = dest / "corpus.json"
    out.write_text(json.dumps(corpus, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")

    import shutil

    shutil.rmtree(data_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
