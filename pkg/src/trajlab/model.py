"""Core domain types for per-second car trajectories and their annotations.

Conventions used throughout the package:

* ``time_step`` is 1-based: the first point of a trajectory has
  ``time_step == 1`` and valid steps run ``1..n`` with no gaps.
* Headings are compass bearings in ``[0, 360)`` degrees (0 = north,
  180 = south).
* All types are immutable values; operations on them are pure functions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence

# Heading-change readings at or below this magnitude (degrees) are treated
# as "no change": GPS bearings jitter by a fraction of a degree even on a
# perfectly straight road.
HEADING_NOISE_DEG = 0.5


class AnnotationType(enum.Enum):
    """Annotation choice attached to a selected point.

    ``NON_SEGMENT`` is an edit command (it removes a previous mark at the
    same point) and never appears in persisted, finalized layers.
    """

    SEGMENT = "Segment"
    MAYBE_SEGMENT = "Maybe-Segment"
    NON_SEGMENT = "Non-Segment"


class SegmentType(enum.Enum):
    """Driving-pattern label for the segment ending at a marked point."""

    EXIT = "Exit"
    MERGE = "Merge"
    EXIT_MERGE = "Exit-Merge"
    LOOP = "Loop"
    TURN = "Turn"
    SMOOTH_TURN = "Smooth-Turn"
    LEFT_TURN = "Left-Turn"
    RIGHT_TURN = "Right-Turn"
    JIGGLING = "Jiggling"
    SPEED_UP = "Speed-Up"
    SLOW_DOWN = "Slow-Down"
    TRAFFIC_LIGHT = "Traffic-Light"
    TRAFFIC_JAM = "Traffic-Jam"
    OTHER = "Other"


# Stable ordering used whenever a set of segment types is serialized.
_SEGMENT_TYPE_ORDER = {t: i for i, t in enumerate(SegmentType)}


def sort_segment_types(types: Iterable[SegmentType]) -> tuple[SegmentType, ...]:
    """Deterministic ordering for segment-type sets (declaration order)."""
    return tuple(sorted(types, key=_SEGMENT_TYPE_ORDER.__getitem__))


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class TrajectoryPoint:
    """One per-second record of a trajectory.

    ``speed`` is in miles per hour, ``acceleration`` in m/s^2, ``heading``
    and ``heading_change`` in degrees.  Construction does not validate
    ranges: raw files may carry out-of-range values which the quality
    validator reports instead of refusing to represent.
    """

    time_step: int
    timestamp: datetime
    speed: float
    acceleration: float
    heading: float
    heading_change: float
    latitude: float
    longitude: float


@dataclass(frozen=True)
class Trajectory:
    """An ordered sequence of points sharing one trip identity."""

    trip_id: str
    points: tuple[TrajectoryPoint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    def point_at(self, time_step: int) -> TrajectoryPoint:
        """Look up a point by its 1-based time step."""
        for p in self.points:
            if p.time_step == time_step:
                return p
        raise KeyError(f"trip {self.trip_id!r} has no point at time_step {time_step}")

    def has_step(self, time_step: int) -> bool:
        return any(p.time_step == time_step for p in self.points)

    def speeds(self) -> list[float]:
        return [p.speed for p in self.points]

    def heading_changes(self) -> list[float]:
        return [p.heading_change for p in self.points]


@dataclass(frozen=True)
class AnnotationMark:
    """One expert decision: a cutting point plus its pattern labels."""

    trip_id: str
    time_step: int
    annotation_type: AnnotationType
    segment_types: frozenset[SegmentType]
    author: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "segment_types", frozenset(self.segment_types))
        if not self.segment_types:
            raise ValidationError(
                f"mark at step {self.time_step} of {self.trip_id!r} has no segment types"
            )

    def sorted_types(self) -> tuple[SegmentType, ...]:
        return sort_segment_types(self.segment_types)


@dataclass(frozen=True)
class AnnotationLayer:
    """All marks placed by one author on one trajectory.

    Marks are kept sorted by time step; at most one mark per step.
    """

    trip_id: str
    author: str
    marks: tuple[AnnotationMark, ...] = ()

    def __post_init__(self) -> None:
        marks = tuple(sorted(self.marks, key=lambda m: m.time_step))
        steps = [m.time_step for m in marks]
        if len(set(steps)) != len(steps):
            dupes = sorted({s for s in steps if steps.count(s) > 1})
            raise ValidationError(
                f"layer ({self.trip_id!r}, {self.author!r}) has duplicate marks at steps {dupes}"
            )
        for m in marks:
            if m.trip_id != self.trip_id:
                raise ValidationError(
                    f"mark for trip {m.trip_id!r} placed in layer of {self.trip_id!r}"
                )
        object.__setattr__(self, "marks", marks)

    def __len__(self) -> int:
        return len(self.marks)

    def mark_at(self, time_step: int) -> AnnotationMark | None:
        for m in self.marks:
            if m.time_step == time_step:
                return m
        return None

    def with_mark(self, mark: AnnotationMark) -> "AnnotationLayer":
        """Return a new layer with ``mark`` upserted at its time step."""
        rest = [m for m in self.marks if m.time_step != mark.time_step]
        return AnnotationLayer(self.trip_id, self.author, tuple(rest) + (mark,))

    def without_mark(self, time_step: int) -> "AnnotationLayer":
        rest = tuple(m for m in self.marks if m.time_step != time_step)
        return AnnotationLayer(self.trip_id, self.author, rest)


def compute_heading_changes(
    headings: Sequence[float], *, circular: bool = True
) -> list[float]:
    """Per-step heading-change magnitudes for a sequence of headings.

    The first entry is always 0.  With ``circular=True`` (the default) each
    subsequent entry is the minimal circular difference
    ``min(|delta|, 360 - |delta|)``, so a 359 -> 1 transition reads as 2
    degrees rather than 358.  ``circular=False`` keeps the plain absolute
    subtraction for byte-exact reproduction of files that were built with
    the literal formula.
    """
    if not headings:
        raise ValidationError("empty heading sequence")
    for i, h in enumerate(headings):
        if not (0.0 <= h < 360.0):
            raise ValidationError(f"heading {h!r} at index {i} outside [0, 360)")
    changes = [0.0]
    for prev, nxt in zip(headings, headings[1:]):
        delta = abs(nxt - prev)
        if circular:
            delta = min(delta, 360.0 - delta)
        changes.append(delta)
    return changes


def signed_heading_delta(prev: float, nxt: float) -> float:
    """Signed turn from ``prev`` to ``nxt`` in degrees, within (-180, 180].

    Positive means clockwise (rightward) rotation.  Satisfies
    ``(prev + result) % 360 == nxt`` and ``abs(result)`` equals the circular
    heading-change magnitude for the same pair.
    """
    for name, h in (("prev", prev), ("next", nxt)):
        if not (0.0 <= h < 360.0):
            raise ValidationError(f"{name} heading {h!r} outside [0, 360)")
    delta = (nxt - prev) % 360.0
    if delta > 180.0:
        delta -= 360.0
    return delta


@dataclass(frozen=True)
class SegmentationCheck:
    """Outcome of validating a cutting-index list against a trajectory."""

    ok: bool
    violation: str | None = None


def validate_segmentation(
    trajectory: Trajectory, cutting_indexes: Sequence[int]
) -> SegmentationCheck:
    """Check that cutting indexes induce a partition of the trajectory.

    Valid cut lists are strictly ascending, lie in ``[1, n]``, and end at
    ``n`` (the last point always closes the final segment).  The first
    violated condition is reported.
    """
    n = trajectory.n
    cuts = list(cutting_indexes)
    if not cuts:
        return SegmentationCheck(False, "no cutting indexes (last cut must equal n)")
    for prev, nxt in zip(cuts, cuts[1:]):
        if nxt <= prev:
            return SegmentationCheck(False, f"not ascending: {prev} followed by {nxt}")
    for c in cuts:
        if not (1 <= c <= n):
            return SegmentationCheck(False, f"cut {c} outside [1, {n}]")
    if cuts[-1] != n:
        return SegmentationCheck(False, f"last cut must equal n ({cuts[-1]} != {n})")
    return SegmentationCheck(True)
