"""Reading, writing, and quality-checking DACT-format trajectory CSVs.

A DACT file is a comma-separated UTF-8 text with a fixed 11-column header.
Rows are grouped by ``TripID`` in file order.  Annotated rows carry an
``Annotation`` cell (``Segment`` / ``Maybe-Segment``; empty or ``NULL``
means unannotated) and a ``SegmentType`` cell holding one or more
``;``-separated type names.

Because merged DACT files cannot express unmerged multi-annotator data,
per-(trip, author) annotation layers are also persisted as JSON sidecar
documents (:func:`layer_to_dict` / :func:`layer_from_dict`).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, TextIO
from zoneinfo import ZoneInfo

from .model import (
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    TrajectoryPoint,
    ValidationError,
    sort_segment_types,
)

DACT_COLUMNS = (
    "TripID",
    "TimeStep",
    "TimeStamp",
    "Speed",
    "Acceleration",
    "Heading",
    "HeadingChange",
    "Latitude",
    "Longitude",
    "Annotation",
    "SegmentType",
)

# The published files report timestamps in US Eastern wall-clock time.
DEFAULT_TIMEZONE = "America/New_York"
_TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"

_SEGMENT_TYPE_BY_NAME = {t.value: t for t in SegmentType}
_ANNOTATION_BY_NAME = {t.value: t for t in AnnotationType}
_MULTI_TYPE_DELIMITER = ";"


class DactFormatError(ValueError):
    """Fatal, file-level problem (e.g. a malformed header)."""


@dataclass(frozen=True)
class Issue:
    """One validation finding: ``row`` is 1-based within the trip."""

    row: int
    rule: str
    message: str
    fatal: bool = True


@dataclass(frozen=True)
class ValidationReport:
    trip_id: str
    issues: tuple[Issue, ...] = ()

    @property
    def verdict(self) -> str:
        return "reject" if any(i.fatal for i in self.issues) else "accept"

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"


@dataclass(frozen=True)
class DactParseResult:
    trajectories: tuple[Trajectory, ...]
    layers: tuple[AnnotationLayer, ...]
    reports: tuple[ValidationReport, ...]

    def trajectory(self, trip_id: str) -> Trajectory:
        for t in self.trajectories:
            if t.trip_id == trip_id:
                return t
        raise KeyError(trip_id)

    def layer(self, trip_id: str) -> AnnotationLayer:
        for l in self.layers:
            if l.trip_id == trip_id:
                return l
        raise KeyError(trip_id)


def _is_null(cell: str) -> bool:
    return cell.strip() in ("", "NULL")


def _format_float(value: float) -> str:
    # repr() is the shortest decimal string that round-trips the value.
    return repr(float(value))


def parse_timestamp(text: str, tz: ZoneInfo) -> datetime:
    local = datetime.strptime(text, _TIMESTAMP_FORMAT).replace(tzinfo=tz)
    return local.astimezone(timezone.utc)


def format_timestamp(moment: datetime, tz: ZoneInfo) -> str:
    return moment.astimezone(tz).strftime(_TIMESTAMP_FORMAT)


def parse_dact(
    source: str | TextIO,
    *,
    author: str = "dact",
    tz: str = DEFAULT_TIMEZONE,
) -> DactParseResult:
    """Parse a DACT CSV stream into trajectories, layers, and reports.

    One layer per trip is returned (possibly empty), authored ``author``:
    the merged CSV format does not record who placed a mark.  Rows that
    cannot be represented are dropped and reported; the per-trip report
    also folds in :func:`validate_quality` findings.
    """
    text = source if isinstance(source, str) else source.read()
    zone = ZoneInfo(tz)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DactFormatError("empty stream: missing DACT header") from None
    if header and header[0].startswith("﻿"):
        header[0] = header[0].lstrip("﻿")
    if tuple(h.strip() for h in header) != DACT_COLUMNS:
        raise DactFormatError(
            f"malformed header: expected {','.join(DACT_COLUMNS)!r}, got {','.join(header)!r}"
        )

    order: list[str] = []
    points: dict[str, list[TrajectoryPoint]] = {}
    marks: dict[str, list[AnnotationMark]] = {}
    issues: dict[str, list[Issue]] = {}
    seen_steps: dict[str, set[int]] = {}
    row_no: dict[str, int] = {}

    for row in reader:
        if not row:
            continue
        trip_id = row[0].strip() if row else ""
        if trip_id not in order:
            order.append(trip_id)
            points[trip_id] = []
            marks[trip_id] = []
            issues[trip_id] = []
            seen_steps[trip_id] = set()
            row_no[trip_id] = 0
        row_no[trip_id] += 1
        at = row_no[trip_id]

        def report(rule: str, message: str) -> None:
            issues[trip_id].append(Issue(at, rule, message))

        if len(row) != len(DACT_COLUMNS):
            report(
                "row-shape",
                f"expected {len(DACT_COLUMNS)} cells, got {len(row)} (unknown column?)",
            )
            continue

        (_, step_s, stamp_s, speed_s, accel_s, heading_s, hc_s, lat_s, lng_s,
         annot_s, types_s) = (cell.strip() for cell in row)

        try:
            time_step = int(step_s)
        except ValueError:
            report("non-numeric", f"TimeStep {step_s!r} is not an integer")
            continue
        try:
            stamp = parse_timestamp(stamp_s, zone)
        except ValueError:
            report("bad-timestamp", f"TimeStamp {stamp_s!r} is not '{_TIMESTAMP_FORMAT}'")
            continue
        numeric: dict[str, float] = {}
        bad_cell = None
        for name, cell in (
            ("Speed", speed_s),
            ("Acceleration", accel_s),
            ("Heading", heading_s),
            ("HeadingChange", hc_s),
            ("Latitude", lat_s),
            ("Longitude", lng_s),
        ):
            try:
                numeric[name] = float(cell)
            except ValueError:
                bad_cell = (name, cell)
                break
        if bad_cell is not None:
            report("non-numeric", f"{bad_cell[0]} {bad_cell[1]!r} is not a number")
            continue

        if time_step in seen_steps[trip_id]:
            report("duplicate-step", f"duplicate TimeStep {time_step}")
            continue
        seen_steps[trip_id].add(time_step)

        points[trip_id].append(
            TrajectoryPoint(
                time_step=time_step,
                timestamp=stamp,
                speed=numeric["Speed"],
                acceleration=numeric["Acceleration"],
                heading=numeric["Heading"],
                heading_change=numeric["HeadingChange"],
                latitude=numeric["Latitude"],
                longitude=numeric["Longitude"],
            )
        )

        annotation: AnnotationType | None = None
        if not _is_null(annot_s):
            annotation = _ANNOTATION_BY_NAME.get(annot_s)
            if annotation is None:
                report("unknown-annotation", f"Annotation {annot_s!r} is not recognized")
                continue
            if annotation is AnnotationType.NON_SEGMENT:
                report("unknown-annotation", "Non-Segment is an edit command, never persisted")
                continue
        if annotation is None:
            if not _is_null(types_s):
                report(
                    "annotation-consistency",
                    f"SegmentType {types_s!r} present without an Annotation",
                )
            continue
        if _is_null(types_s):
            report("annotation-consistency", "Annotation present but SegmentType empty")
            continue
        seg_types: set[SegmentType] = set()
        unknown = None
        for name in types_s.split(_MULTI_TYPE_DELIMITER):
            seg = _SEGMENT_TYPE_BY_NAME.get(name.strip())
            if seg is None:
                unknown = name.strip()
                break
            seg_types.add(seg)
        if unknown is not None:
            report("unknown-segment-type", f"SegmentType {unknown!r} is not recognized")
            continue
        marks[trip_id].append(
            AnnotationMark(trip_id, time_step, annotation, frozenset(seg_types), author)
        )

    trajectories = []
    layers = []
    reports = []
    for trip_id in order:
        trajectory = Trajectory(trip_id, tuple(points[trip_id]))
        trajectories.append(trajectory)
        layers.append(AnnotationLayer(trip_id, author, tuple(marks[trip_id])))
        quality = validate_quality(trajectory)
        reports.append(ValidationReport(trip_id, tuple(issues[trip_id]) + quality.issues))
    return DactParseResult(tuple(trajectories), tuple(layers), tuple(reports))


def validate_quality(trajectory: Trajectory) -> ValidationReport:
    """Apply the data-quality criteria to one trajectory.

    Fatal: gaps or disorder in the time-step sequence, timestamp deltas
    other than exactly one second, out-of-range fields.  Advisory:
    zero-length and constant-position trajectories.
    """
    issues: list[Issue] = []
    pts = trajectory.points
    if not pts:
        return ValidationReport(
            trajectory.trip_id, (Issue(0, "zero-length", "trajectory has no points", fatal=False),)
        )

    expected = 1
    for i, p in enumerate(pts, start=1):
        if p.time_step == expected:
            expected += 1
        elif p.time_step > expected:
            issues.append(Issue(i, "missing-point", f"missing point at step {expected}"))
            expected = p.time_step + 1
        else:
            issues.append(
                Issue(i, "unordered-step", f"step {p.time_step} out of order (expected {expected})")
            )
            expected = max(expected, p.time_step + 1)

    for i, (prev, nxt) in enumerate(zip(pts, pts[1:]), start=2):
        delta = (nxt.timestamp - prev.timestamp).total_seconds()
        if delta != 1.0:
            issues.append(
                Issue(i, "sampling-rate", f"timestamp delta of {delta:g} s at row {i}")
            )

    for i, p in enumerate(pts, start=1):
        if not (p.speed >= 0.0):
            issues.append(Issue(i, "range", f"speed {p.speed!r} is negative"))
        if not (0.0 <= p.heading < 360.0):
            issues.append(Issue(i, "range", f"heading {p.heading!r} outside [0, 360)"))
        if not (0.0 <= p.heading_change < 360.0):
            issues.append(Issue(i, "range", f"heading change {p.heading_change!r} outside [0, 360)"))
        if not (-90.0 <= p.latitude <= 90.0):
            issues.append(Issue(i, "range", f"latitude {p.latitude!r} outside [-90, 90]"))
        if not (-180.0 <= p.longitude <= 180.0):
            issues.append(Issue(i, "range", f"longitude {p.longitude!r} outside [-180, 180]"))

    if len(pts) >= 2 and all(
        p.latitude == pts[0].latitude and p.longitude == pts[0].longitude for p in pts
    ):
        issues.append(
            Issue(1, "constant-position", "all points share one position", fatal=False)
        )
    return ValidationReport(trajectory.trip_id, tuple(issues))


def _mark_cells(mark: AnnotationMark | None) -> tuple[str, str]:
    if mark is None:
        return "", ""
    if mark.annotation_type is AnnotationType.NON_SEGMENT:
        raise ValidationError(
            f"Non-Segment mark at step {mark.time_step} cannot be persisted"
        )
    names = _MULTI_TYPE_DELIMITER.join(t.value for t in sort_segment_types(mark.segment_types))
    return mark.annotation_type.value, names


def write_dact(
    trajectory: Trajectory,
    layer: AnnotationLayer | None = None,
    *,
    tz: str = DEFAULT_TIMEZONE,
) -> str:
    """Serialize one trajectory (and optionally one layer) as DACT CSV."""
    return write_dact_corpus([(trajectory, layer)], tz=tz)


def write_dact_corpus(
    items: Iterable[tuple[Trajectory, AnnotationLayer | None]],
    *,
    tz: str = DEFAULT_TIMEZONE,
) -> str:
    """Serialize several (trajectory, layer) pairs into one DACT CSV."""
    zone = ZoneInfo(tz)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DACT_COLUMNS)
    for trajectory, layer in items:
        by_step: dict[int, AnnotationMark] = {}
        if layer is not None:
            if layer.trip_id != trajectory.trip_id:
                raise ValidationError(
                    f"layer of trip {layer.trip_id!r} does not belong to {trajectory.trip_id!r}"
                )
            steps = {p.time_step for p in trajectory.points}
            for mark in layer.marks:
                if mark.time_step not in steps:
                    raise ValidationError(
                        f"mark at step {mark.time_step} references no point of "
                        f"{trajectory.trip_id!r}"
                    )
                by_step[mark.time_step] = mark
        for p in trajectory.points:
            annot, types = _mark_cells(by_step.get(p.time_step))
            writer.writerow(
                [
                    trajectory.trip_id,
                    str(p.time_step),
                    format_timestamp(p.timestamp, zone),
                    _format_float(p.speed),
                    _format_float(p.acceleration),
                    _format_float(p.heading),
                    _format_float(p.heading_change),
                    _format_float(p.latitude),
                    _format_float(p.longitude),
                    annot,
                    types,
                ]
            )
    return out.getvalue()


def layer_to_dict(layer: AnnotationLayer) -> dict:
    """Annotation-layer sidecar document for one (trip, author)."""
    return {
        "trip_id": layer.trip_id,
        "author": layer.author,
        "marks": [
            {
                "time_step": m.time_step,
                "annotation_type": m.annotation_type.value,
                "segment_types": [t.value for t in m.sorted_types()],
            }
            for m in layer.marks
        ],
    }


def layer_from_dict(doc: dict) -> AnnotationLayer:
    trip_id = doc["trip_id"]
    author = doc["author"]
    marks = []
    for entry in doc.get("marks", []):
        annot = _ANNOTATION_BY_NAME.get(entry["annotation_type"])
        if annot is None or annot is AnnotationType.NON_SEGMENT:
            raise ValidationError(
                f"sidecar mark has unusable annotation_type {entry['annotation_type']!r}"
            )
        types = set()
        for name in entry["segment_types"]:
            seg = _SEGMENT_TYPE_BY_NAME.get(name)
            if seg is None:
                raise ValidationError(f"sidecar mark has unknown segment type {name!r}")
            types.add(seg)
        marks.append(AnnotationMark(trip_id, int(entry["time_step"]), annot, frozenset(types), author))
    return AnnotationLayer(trip_id, author, tuple(marks))


def dump_layer(layer: AnnotationLayer, path: str | Path) -> None:
    Path(path).write_text(json.dumps(layer_to_dict(layer), indent=2) + "\n", encoding="utf-8")


def load_layer(path: str | Path) -> AnnotationLayer:
    return layer_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
