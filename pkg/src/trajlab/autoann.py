"""Rule-based automated annotator.

Each point of a trajectory is compared against its k-point neighborhoods
(5 points = a 5-second window at the 1 Hz sampling rate) and marked as the
end of a segment when one of the heuristics fires:

* speed-up end: strict local speed maximum over the 2k window,
* slow-down end: strict local speed minimum; reclassified as traffic-jam
  when the speed there is below the low-speed threshold,
* traffic-light end: k slow predecessors, slow point, fast successor,
* turn end: quiet heading neighborhood with one large heading change,
* loop (off by default): the path returns within a small radius of an
  earlier point while the car keeps moving.

Plateaus of equal speed yield exactly one mark, at the last plateau point:
extrema compare with >= against predecessors and > against successors.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .agreement import haversine
from .config import as_bool, as_float, as_int
from .model import (
    HEADING_NOISE_DEG,
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    ValidationError,
)

AUTOANN_AUTHOR = "AutoAnn"

_CONFIG_KEYS = (
    "k",
    "low_speed_threshold",
    "turn_threshold",
    "loop_radius",
    "loop_min_speed",
    "loop_enabled",
)


@dataclass(frozen=True)
class AutoAnnConfig:
    """Tunable parameters of the heuristic annotator.

    Defaults are the experimentally chosen values: a 5-point neighborhood,
    9 mph low-speed threshold, and 15 degree heading-change threshold.  The
    loop heuristic is off by default; its radius and minimum speed are this
    implementation's choices.
    """

    k: int = 5
    low_speed_threshold: float = 9.0
    turn_threshold: float = 15.0
    loop_radius: float = 15.0
    loop_min_speed: float = 5.0
    loop_enabled: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        for name in ("low_speed_threshold", "turn_threshold", "loop_radius", "loop_min_speed"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str]) -> "AutoAnnConfig":
        unknown = set(raw) - set(_CONFIG_KEYS)
        if unknown:
            raise ValidationError(f"unknown autoann config keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "k" in raw:
            kwargs["k"] = as_int(raw["k"], "k")
        for key in ("low_speed_threshold", "turn_threshold", "loop_radius", "loop_min_speed"):
            if key in raw:
                kwargs[key] = as_float(raw[key], key)
        if "loop_enabled" in raw:
            kwargs["loop_enabled"] = as_bool(raw["loop_enabled"], "loop_enabled")
        return cls(**kwargs)


@dataclass(frozen=True)
class AutoAnnResult:
    """Marks emitted by one run plus the per-type histogram."""

    layer: AnnotationLayer
    type_histogram: dict[SegmentType, int]

    @property
    def total_marks(self) -> int:
        return len(self.layer.marks)

    @property
    def total_typed(self) -> int:
        # Marks counted with multiplicity of types; equals the histogram sum.
        return sum(self.type_histogram.values())


def _window_stats(values: np.ndarray, k: int, reduce) -> np.ndarray:
    # stats[j] = reduce(values[j : j + k]); callers index predecessor
    # windows at i - k and successor windows at i + 1.
    return reduce(sliding_window_view(values, k), axis=1)


def _eligible(n: int, k: int) -> np.ndarray:
    # 0-based interior indexes with k predecessors and k successors.
    return np.arange(k, n - k)


def detect_speedup_ends(trajectory: Trajectory, config: AutoAnnConfig) -> list[int]:
    """1-based indexes ending a speed-up: local speed maxima over 2k windows."""
    speeds = np.asarray(trajectory.speeds(), dtype=float)
    n, k = speeds.size, config.k
    if n < 2 * k + 1:
        return []
    win_max = _window_stats(speeds, k, np.max)
    idx = _eligible(n, k)
    hit = (speeds[idx] >= win_max[idx - k]) & (speeds[idx] > win_max[idx + 1])
    return [int(i) + 1 for i in idx[hit]]


def detect_slowdown_ends(trajectory: Trajectory, config: AutoAnnConfig) -> list[int]:
    """1-based indexes ending a slow-down: local speed minima over 2k windows."""
    speeds = np.asarray(trajectory.speeds(), dtype=float)
    n, k = speeds.size, config.k
    if n < 2 * k + 1:
        return []
    win_min = _window_stats(speeds, k, np.min)
    idx = _eligible(n, k)
    hit = (speeds[idx] <= win_min[idx - k]) & (speeds[idx] < win_min[idx + 1])
    return [int(i) + 1 for i in idx[hit]]


def classify_slowdowns(
    trajectory: Trajectory, slowdown_ends: list[int], config: AutoAnnConfig
) -> dict[int, SegmentType]:
    """Split slow-down ends into serious (traffic-jam) and ordinary ones.

    A slow-down whose end speed drops strictly below the low-speed
    threshold is a traffic jam; the jam label replaces the slow-down one.
    """
    out: dict[int, SegmentType] = {}
    for step in slowdown_ends:
        speed = trajectory.point_at(step).speed
        out[step] = (
            SegmentType.TRAFFIC_JAM
            if speed < config.low_speed_threshold
            else SegmentType.SLOW_DOWN
        )
    return out


def detect_traffic_light_ends(trajectory: Trajectory, config: AutoAnnConfig) -> list[int]:
    """1-based indexes where a standing-still episode ends.

    All k predecessors and the point itself are below the low-speed
    threshold while the immediate successor is above it.
    """
    speeds = np.asarray(trajectory.speeds(), dtype=float)
    n, k, thr = speeds.size, config.k, config.low_speed_threshold
    if n < k + 2:
        return []
    win_max = _window_stats(speeds, k, np.max)
    idx = np.arange(k, n - 1)
    hit = (win_max[idx - k] < thr) & (speeds[idx] < thr) & (speeds[idx + 1] > thr)
    return [int(i) + 1 for i in idx[hit]]


def detect_turn_ends(trajectory: Trajectory, config: AutoAnnConfig) -> list[int]:
    """1-based indexes of sharp isolated turns.

    The heading change of all 2k neighbors must be zero (below the GPS
    noise tolerance) while the point's own change exceeds the turn
    threshold.
    """
    changes = np.asarray(trajectory.heading_changes(), dtype=float)
    n, k = changes.size, config.k
    if n < 2 * k + 1:
        return []
    win_max = _window_stats(changes, k, np.max)
    idx = _eligible(n, k)
    hit = (
        (win_max[idx - k] <= HEADING_NOISE_DEG)
        & (win_max[idx + 1] <= HEADING_NOISE_DEG)
        & (changes[idx] > config.turn_threshold)
    )
    return [int(i) + 1 for i in idx[hit]]


def detect_loops(trajectory: Trajectory, config: AutoAnnConfig) -> list[tuple[int, int]]:
    """(begin, end) step pairs where the path closes on itself.

    A pair qualifies when the two points lie within ``loop_radius`` meters,
    are more than 2k steps apart, and the car kept moving faster than
    ``loop_min_speed`` in between (a parked car revisits its own position
    every second).  Qualifying pairs are reduced to non-overlapping loops:
    the earliest closing end wins, with the earliest begin for that end.
    """
    if not config.loop_enabled:
        return []
    pts = trajectory.points
    n, k = len(pts), config.k
    if n < 2 * k + 2:
        return []
    lat = np.asarray([p.latitude for p in pts])
    lng = np.asarray([p.longitude for p in pts])
    speeds = np.asarray(trajectory.speeds(), dtype=float)
    loops: list[tuple[int, int]] = []
    free_from = 0
    for i in range(2 * k + 1, n):
        lo = free_from
        hi = i - 2 * k  # exclusive bound keeps i - j > 2k
        if lo >= hi:
            continue
        for j in range(lo, hi):
            if haversine(lat[j], lng[j], lat[i], lng[i]) >= config.loop_radius:
                continue
            if speeds[j : i + 1].min() <= config.loop_min_speed:
                continue
            loops.append((j + 1, i + 1))
            free_from = i + 1
            break
    return loops


def run_autoann(trajectory: Trajectory, config: AutoAnnConfig = AutoAnnConfig()) -> AutoAnnResult:
    """Run every heuristic and merge the marks into one layer.

    All marks carry annotation type Segment.  When several heuristics fire
    at the same index their segment types are merged into a single mark;
    the histogram counts each type separately.
    """
    types_at: dict[int, set[SegmentType]] = {}

    def add(step: int, seg: SegmentType) -> None:
        types_at.setdefault(step, set()).add(seg)

    for step in detect_speedup_ends(trajectory, config):
        add(step, SegmentType.SPEED_UP)
    slowdowns = detect_slowdown_ends(trajectory, config)
    for step, seg in classify_slowdowns(trajectory, slowdowns, config).items():
        add(step, seg)
    for step in detect_traffic_light_ends(trajectory, config):
        add(step, SegmentType.TRAFFIC_LIGHT)
    for step in detect_turn_ends(trajectory, config):
        add(step, SegmentType.TURN)
    for _, end in detect_loops(trajectory, config):
        add(end, SegmentType.LOOP)

    marks = tuple(
        AnnotationMark(
            trajectory.trip_id, step, AnnotationType.SEGMENT, frozenset(types), AUTOANN_AUTHOR
        )
        for step, types in sorted(types_at.items())
    )
    layer = AnnotationLayer(trajectory.trip_id, AUTOANN_AUTHOR, marks)
    histogram = Counter(t for m in marks for t in m.segment_types)
    return AutoAnnResult(layer, dict(histogram))
