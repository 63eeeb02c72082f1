"""Aggregator support: threshold candidates and layer merging.

Candidate detectors surface the speed and heading patterns the strict and
easy reconciliation passes look for: maximal monotone speed runs whose net
change clears the profile's mph threshold, and sustained heading-change
runs lasting at least the profile's run length.  The merge operation turns
per-mark accept / refine / reject decisions over several annotators'
layers (plus optional machine suggestions) into one finalized layer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from .config import as_float, as_int
from .model import (
    HEADING_NOISE_DEG,
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    ValidationError,
    signed_heading_delta,
    sort_segment_types,
)

_PROFILE_KEYS = ("name", "min_speed_change", "min_heading_run")


@dataclass(frozen=True)
class ThresholdProfile:
    """Significance thresholds for one reconciliation pass.

    The strict pass calls a net speed change of at least 5 mph and a
    5-second heading run significant; the easy pass relaxes both to 10.
    """

    name: str
    min_speed_change: float
    min_heading_run: int

    def __post_init__(self) -> None:
        if self.min_speed_change <= 0:
            raise ValidationError("min_speed_change must be positive")
        if self.min_heading_run <= 0:
            raise ValidationError("min_heading_run must be positive")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str]) -> "ThresholdProfile":
        unknown = set(raw) - set(_PROFILE_KEYS)
        if unknown:
            raise ValidationError(f"unknown profile config keys: {sorted(unknown)}")
        return cls(
            name=raw.get("name", "custom"),
            min_speed_change=as_float(raw["min_speed_change"], "min_speed_change"),
            min_heading_run=as_int(raw["min_heading_run"], "min_heading_run"),
        )


STRICT_PROFILE = ThresholdProfile("strict", min_speed_change=5.0, min_heading_run=5)
EASY_PROFILE = ThresholdProfile("easy", min_speed_change=10.0, min_heading_run=10)

_BUILTIN_PROFILES = {p.name: p for p in (STRICT_PROFILE, EASY_PROFILE)}


def profile_by_name(name: str) -> ThresholdProfile:
    try:
        return _BUILTIN_PROFILES[name]
    except KeyError:
        raise ValidationError(
            f"unknown profile {name!r}; expected one of {sorted(_BUILTIN_PROFILES)}"
        ) from None


@dataclass(frozen=True)
class CandidateSegment:
    """A machine-suggested segment: span, suggested labels, and evidence.

    ``evidence`` is the net speed change (mph) for speed candidates and
    the run length (seconds) for heading candidates.
    """

    begin: int
    end: int
    suggested_types: frozenset[SegmentType]
    evidence: float
    kind: str  # "speed" | "heading"

    def __post_init__(self) -> None:
        if self.begin >= self.end:
            raise ValidationError(f"candidate span [{self.begin}, {self.end}] is empty")

    @property
    def candidate_id(self) -> str:
        return f"{self.kind}:{self.begin}-{self.end}"


def _monotone_runs(speeds: Sequence[float], non_decreasing: bool) -> list[tuple[int, int]]:
    # Maximal 0-based [b, e] spans whose consecutive diffs all point one way
    # (plateaus extend runs of either direction).
    runs = []
    n = len(speeds)
    b = 0
    while b < n - 1:
        e = b
        while e < n - 1 and (
            speeds[e + 1] >= speeds[e] if non_decreasing else speeds[e + 1] <= speeds[e]
        ):
            e += 1
        if e > b:
            runs.append((b, e))
            b = e
        else:
            b += 1
    return runs


def detect_speed_candidates(
    trajectory: Trajectory, profile: ThresholdProfile
) -> list[CandidateSegment]:
    """Maximal monotone speed runs whose net change clears the threshold."""
    speeds = trajectory.speeds()
    candidates = []
    for seg_type, non_decreasing in ((SegmentType.SPEED_UP, True), (SegmentType.SLOW_DOWN, False)):
        for b, e in _monotone_runs(speeds, non_decreasing):
            net = abs(speeds[e] - speeds[b])
            if net >= profile.min_speed_change:
                candidates.append(
                    CandidateSegment(b + 1, e + 1, frozenset({seg_type}), net, "speed")
                )
    candidates.sort(key=lambda c: (c.begin, c.end, c.candidate_id))
    return candidates


def detect_heading_candidates(
    trajectory: Trajectory, profile: ThresholdProfile
) -> list[CandidateSegment]:
    """Sustained heading-change runs, labeled smooth-turn or jiggling.

    A run is a maximal stretch of consecutive points whose heading change
    exceeds the noise tolerance; it qualifies when it lasts at least the
    profile's run length (points are one second apart).  Runs whose signed
    deltas flip direction at least twice suggest jiggling; all other runs
    suggest a smooth turn.
    """
    pts = trajectory.points
    changes = trajectory.heading_changes()
    headings = [p.heading for p in pts]
    candidates = []
    n = len(pts)
    b = 0
    while b < n:
        if changes[b] <= HEADING_NOISE_DEG:
            b += 1
            continue
        e = b
        while e + 1 < n and changes[e + 1] > HEADING_NOISE_DEG:
            e += 1
        length = e - b + 1
        if length >= profile.min_heading_run:
            signs = [
                1 if signed_heading_delta(headings[t - 1], headings[t]) > 0 else -1
                for t in range(b, e + 1)
            ]
            flips = sum(1 for s, t in zip(signs, signs[1:]) if s != t)
            seg_type = SegmentType.JIGGLING if flips >= 2 else SegmentType.SMOOTH_TURN
            candidates.append(
                CandidateSegment(b + 1, e + 1, frozenset({seg_type}), float(length), "heading")
            )
        b = e + 1
    return candidates


def detect_candidates(
    trajectory: Trajectory, profile: ThresholdProfile
) -> list[CandidateSegment]:
    """All candidates of both kinds, ordered by span."""
    out = detect_speed_candidates(trajectory, profile) + detect_heading_candidates(
        trajectory, profile
    )
    out.sort(key=lambda c: (c.begin, c.end, c.candidate_id))
    return out


class MergeAction(enum.Enum):
    ACCEPT = "accept"
    REFINE = "refine"
    REJECT = "reject"


@dataclass(frozen=True)
class MergeDecision:
    """One aggregator decision about one source mark or candidate.

    A source is either an annotator mark, addressed as
    (``source_author``, ``source_time_step``), or a machine candidate,
    addressed by ``candidate_id``.  REFINE may override the time step, the
    segment types, and the annotation type; fields left as None keep the
    source's values.
    """

    action: MergeAction
    source_author: str | None = None
    source_time_step: int | None = None
    candidate_id: str | None = None
    new_time_step: int | None = None
    new_segment_types: frozenset[SegmentType] | None = None
    new_annotation_type: AnnotationType | None = None

    def __post_init__(self) -> None:
        mark_ref = self.source_author is not None and self.source_time_step is not None
        if mark_ref == (self.candidate_id is not None):
            raise ValidationError(
                "decision must reference either (author, time_step) or a candidate id"
            )
        if self.new_annotation_type is AnnotationType.NON_SEGMENT:
            raise ValidationError("a refinement cannot target Non-Segment; use REJECT")

    @property
    def source_key(self) -> tuple:
        if self.candidate_id is not None:
            return ("candidate", self.candidate_id)
        return ("mark", self.source_author, self.source_time_step)


class MergeError(ValueError):
    """A decision list that cannot be applied as given."""


def decision_to_dict(decision: MergeDecision) -> dict:
    """Sidecar-style JSON form of a decision (mark fields plus action)."""
    doc: dict = {"action": decision.action.value}
    if decision.candidate_id is not None:
        doc["candidate"] = decision.candidate_id
    else:
        doc["source_author"] = decision.source_author
        doc["source_time_step"] = decision.source_time_step
    if decision.new_time_step is not None:
        doc["time_step"] = decision.new_time_step
    if decision.new_annotation_type is not None:
        doc["annotation_type"] = decision.new_annotation_type.value
    if decision.new_segment_types is not None:
        doc["segment_types"] = [t.value for t in sort_segment_types(decision.new_segment_types)]
    return doc


def decision_from_dict(doc: Mapping) -> MergeDecision:
    try:
        action = MergeAction(doc["action"])
    except (KeyError, ValueError):
        raise ValidationError(f"decision needs an action of accept/refine/reject: {doc!r}") from None
    try:
        new_annot = (
            AnnotationType(doc["annotation_type"]) if "annotation_type" in doc else None
        )
        new_types = (
            frozenset(SegmentType(name) for name in doc["segment_types"])
            if "segment_types" in doc
            else None
        )
    except ValueError as exc:
        raise ValidationError(f"decision has an unknown name: {exc}") from None
    return MergeDecision(
        action=action,
        source_author=doc.get("source_author"),
        source_time_step=doc.get("source_time_step"),
        candidate_id=doc.get("candidate"),
        new_time_step=doc.get("time_step"),
        new_segment_types=new_types,
        new_annotation_type=new_annot,
    )


def merge_layers(
    trajectory: Trajectory,
    layers: Sequence[AnnotationLayer],
    decisions: Sequence[MergeDecision],
    *,
    candidates: Sequence[CandidateSegment] = (),
    author: str = "aggregator",
) -> AnnotationLayer:
    """Apply accept/refine/reject decisions into one finalized layer.

    The output contains exactly the accepted marks plus refined marks at
    their new positions, authored by the aggregator; undecided sources are
    excluded.  Two decisions landing on one time step merge their segment
    types when their annotation types agree and fail otherwise: conflicts
    are surfaced, never silently resolved.
    """
    if not layers:
        raise MergeError("at least one layer is required")
    for layer in layers:
        if layer.trip_id != trajectory.trip_id:
            raise MergeError(
                f"layer of trip {layer.trip_id!r} does not reference {trajectory.trip_id!r}"
            )
    marks_by_source = {
        (layer.author, m.time_step): m for layer in layers for m in layer.marks
    }
    candidates_by_id = {c.candidate_id: c for c in candidates}
    valid_steps = {p.time_step for p in trajectory.points}

    merged: dict[int, tuple[AnnotationType, set[SegmentType]]] = {}
    seen_sources: set[tuple] = set()
    for decision in decisions:
        if decision.source_key in seen_sources:
            raise MergeError(f"duplicate decision for source {decision.source_key}")
        seen_sources.add(decision.source_key)

        if decision.candidate_id is not None:
            candidate = candidates_by_id.get(decision.candidate_id)
            if candidate is None:
                raise MergeError(f"decision references unknown candidate {decision.candidate_id!r}")
            step = candidate.end
            annot = AnnotationType.SEGMENT
            types = set(candidate.suggested_types)
        else:
            mark = marks_by_source.get((decision.source_author, decision.source_time_step))
            if mark is None:
                raise MergeError(
                    f"decision references unknown mark "
                    f"({decision.source_author!r}, {decision.source_time_step})"
                )
            step = mark.time_step
            annot = mark.annotation_type
            types = set(mark.segment_types)

        if decision.action is MergeAction.REJECT:
            continue
        if decision.action is MergeAction.REFINE:
            if decision.new_time_step is not None:
                step = decision.new_time_step
            if decision.new_segment_types is not None:
                types = set(decision.new_segment_types)
            if decision.new_annotation_type is not None:
                annot = decision.new_annotation_type
        if step not in valid_steps:
            raise MergeError(f"decision lands on nonexistent time step {step}")
        if not types:
            raise MergeError(f"decision at step {step} leaves no segment types")

        if step in merged:
            prev_annot, prev_types = merged[step]
            if prev_annot is not annot:
                raise MergeError(
                    f"conflicting annotation types at step {step}: "
                    f"{prev_annot.value} vs {annot.value}; add an explicit tie-break decision"
                )
            prev_types |= types
        else:
            merged[step] = (annot, types)

    marks = tuple(
        AnnotationMark(trajectory.trip_id, step, annot, frozenset(types), author)
        for step, (annot, types) in sorted(merged.items())
    )
    return AnnotationLayer(trajectory.trip_id, author, marks)
