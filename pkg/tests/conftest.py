"""Shared builders for synthetic trajectories and layers."""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone

import pytest

from trajlab.model import (
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    TrajectoryPoint,
    compute_heading_changes,
)

# Meters per degree of latitude on the 6371 km sphere.
M_PER_DEG = 6_371_000.0 * math.pi / 180.0

MPH_TO_MPS = 0.44704

# Mid-June noon: far from any daylight-saving transition, so Eastern
# wall-clock times round-trip without fold ambiguity.
BASE_UTC = datetime(2017, 6, 1, 16, 0, 0, tzinfo=timezone.utc)


def make_trajectory(
    trip_id: str = "T-1",
    *,
    speeds=None,
    headings=None,
    heading_changes=None,
    n: int | None = None,
    spacing_m: float = 10.0,
    start_lat: float = 39.96,
    start_lng: float = -83.0,
    positions=None,
    start: datetime = BASE_UTC,
) -> Trajectory:
    """Build a structurally valid trajectory from whichever signals matter.

    Points default to a northward straight line with ``spacing_m`` meters
    between consecutive points; pass ``positions`` for explicit placement.
    """
    if n is None:
        for seq in (speeds, headings, heading_changes, positions):
            if seq is not None:
                n = len(seq)
                break
        else:
            n = 20
    speeds = list(speeds) if speeds is not None else [30.0] * n
    headings = list(headings) if headings is not None else [0.0] * n
    if heading_changes is None:
        heading_changes = compute_heading_changes(headings)
    if positions is None:
        positions = [
            (start_lat + i * spacing_m / M_PER_DEG, start_lng) for i in range(n)
        ]
    assert len(speeds) == len(headings) == len(heading_changes) == len(positions) == n

    points = []
    for i in range(n):
        accel = 0.0 if i == 0 else (speeds[i] - speeds[i - 1]) * MPH_TO_MPS
        points.append(
            TrajectoryPoint(
                time_step=i + 1,
                timestamp=start + timedelta(seconds=i),
                speed=speeds[i],
                acceleration=accel,
                heading=headings[i],
                heading_change=heading_changes[i],
                latitude=positions[i][0],
                longitude=positions[i][1],
            )
        )
    return Trajectory(trip_id, tuple(points))


def make_layer(trajectory: Trajectory, author: str, marks_spec) -> AnnotationLayer:
    """Layer from [(time_step, segment_types)] or [(step, types, annot)]."""
    marks = []
    for spec in marks_spec:
        if len(spec) == 2:
            step, types = spec
            annot = AnnotationType.SEGMENT
        else:
            step, types, annot = spec
        if isinstance(types, SegmentType):
            types = {types}
        marks.append(AnnotationMark(trajectory.trip_id, step, annot, frozenset(types), author))
    return AnnotationLayer(trajectory.trip_id, author, tuple(marks))


@pytest.fixture
def straight_trip():
    return make_trajectory("T-straight", n=100, spacing_m=20.0)


def write_corpus(data_dir, trajectories) -> None:
    """Materialize trajectories as one DACT CSV inside a data directory."""
    from trajlab.dact import write_dact_corpus

    data_dir.mkdir(parents=True, exist_ok=True)
    pairs = [(t, None) for t in trajectories]
    (data_dir / "trips.csv").write_text(write_dact_corpus(pairs), encoding="utf-8")
