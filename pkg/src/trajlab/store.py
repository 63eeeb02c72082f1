"""File-backed annotation store.

State lives in plain files under one data directory, so a desk-scale
deployment needs no external services:

* ``*.csv``            DACT trajectory files (any number of trips each),
* ``layers/*.json``    per-(trip, author) annotation-layer sidecars,
* ``finalized/*.json`` finalized layers, one per (trip, phase),
* ``assignments.json`` which two annotators own each trip.

Mutations are atomic single-file writes serialized per (trip, author)
layer; reads see consistent layer snapshots.
"""

from __future__ import annotations

import json
import os
import random
import threading
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import quote

from . import dact
from .aggregation import (
    CandidateSegment,
    MergeDecision,
    ThresholdProfile,
    detect_candidates,
    merge_layers,
    profile_by_name,
)
from .agreement import AgreementDataset
from .autoann import AUTOANN_AUTHOR, AutoAnnConfig, AutoAnnResult, run_autoann
from .model import (
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    ValidationError,
)

FINALIZE_PHASES = ("strict", "easy")

DATA_DIR_ENV = "TRAJLAB_DATA_DIR"


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


class ForbiddenError(StoreError):
    pass


@dataclass(frozen=True)
class Assignment:
    """One trajectory handed to exactly two different annotators."""

    trip_id: str
    annotators: tuple[str, str]

    def __post_init__(self) -> None:
        if len(set(self.annotators)) != 2:
            raise ValidationError(
                f"trip {self.trip_id!r} needs exactly two distinct annotators, "
                f"got {self.annotators!r}"
            )


def assign_trajectories(
    trip_ids: Sequence[str],
    annotator_ids: Sequence[str],
    seed: int,
    *,
    weights: Mapping[str, float] | None = None,
) -> list[Assignment]:
    """Randomly give every trip to exactly two different annotators.

    Selection is deterministic under the seed.  Loads stay balanced: with
    equal (default) weights no two annotators' trip counts differ by more
    than one; optional capacity weights skew the balance proportionally.
    """
    annotators = list(dict.fromkeys(annotator_ids))
    if len(annotators) < 2:
        raise ValidationError("at least two distinct annotators are required")
    if not trip_ids:
        raise ValidationError("no trips to assign")
    load_weight = {a: 1.0 for a in annotators}
    if weights:
        for a, w in weights.items():
            if a not in load_weight:
                raise ValidationError(f"weight for unknown annotator {a!r}")
            if w <= 0:
                raise ValidationError(f"weight for {a!r} must be positive")
            load_weight[a] = float(w)

    rng = random.Random(seed)
    order = list(trip_ids)
    rng.shuffle(order)
    loads = {a: 0 for a in annotators}
    assignments = []
    for trip_id in order:
        ranked = sorted(annotators, key=lambda a: (loads[a] / load_weight[a], rng.random()))
        chosen = tuple(ranked[:2])
        for a in chosen:
            loads[a] += 1
        assignments.append(Assignment(trip_id, chosen))
    assignments.sort(key=lambda a: a.trip_id)
    return assignments


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _safe_name(*parts: str) -> str:
    return "__".join(quote(p, safe="") for p in parts)


class AnnotationStore:
    """Trajectory catalog plus all annotation layers, backed by files.

    Authors in ``reserved_authors`` (the aggregator identity, the machine
    annotator, and the merged-CSV pseudo-author) are excluded from the
    expert phase of agreement analysis.
    """

    def __init__(
        self,
        data_dir: str | Path | None = None,
        *,
        aggregator_author: str = "aggregator",
        autoann_config: AutoAnnConfig = AutoAnnConfig(),
        tz: str = dact.DEFAULT_TIMEZONE,
    ) -> None:
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.aggregator_author = aggregator_author
        self.autoann_config = autoann_config
        self.tz = tz
        self.trajectories: dict[str, Trajectory] = {}
        self.layers: dict[tuple[str, str], AnnotationLayer] = {}
        self.assignments: dict[str, Assignment] = {}
        self.finalized: dict[tuple[str, str], AnnotationLayer] = {}
        self.reports: dict[str, dact.ValidationReport] = {}
        self.load_warnings: list[str] = []
        self._state_lock = threading.Lock()
        self._layer_locks: dict[tuple[str, str], threading.Lock] = defaultdict(threading.Lock)
        if self.data_dir is not None:
            self.load()

    @property
    def reserved_authors(self) -> frozenset[str]:
        return frozenset({self.aggregator_author, AUTOANN_AUTHOR, "dact"})

    # -- loading ---------------------------------------------------------

    def load(self) -> None:
        assert self.data_dir is not None
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.trajectories.clear()
        self.layers.clear()
        self.assignments.clear()
        self.finalized.clear()
        self.reports.clear()
        self.load_warnings.clear()

        for csv_path in sorted(self.data_dir.glob("*.csv")):
            result = dact.parse_dact(csv_path.read_text(encoding="utf-8"), tz=self.tz)
            for trajectory, layer, report in zip(
                result.trajectories, result.layers, result.reports
            ):
                self.reports[trajectory.trip_id] = report
                if not report.accepted:
                    self.load_warnings.append(
                        f"{csv_path.name}: trip {trajectory.trip_id!r} rejected "
                        f"({report.issues[0].message}); not loaded"
                    )
                    continue
                self.trajectories[trajectory.trip_id] = trajectory
                if layer.marks:
                    self.layers[(layer.trip_id, layer.author)] = layer

        layers_dir = self.data_dir / "layers"
        if layers_dir.is_dir():
            for path in sorted(layers_dir.glob("*.json")):
                try:
                    layer = dact.load_layer(path)
                except (ValidationError, KeyError, json.JSONDecodeError) as exc:
                    self.load_warnings.append(f"{path.name}: unreadable layer sidecar ({exc})")
                    continue
                if layer.trip_id not in self.trajectories:
                    self.load_warnings.append(
                        f"{path.name}: layer references unknown trip {layer.trip_id!r}"
                    )
                    continue
                self.layers[(layer.trip_id, layer.author)] = layer

        finalized_dir = self.data_dir / "finalized"
        if finalized_dir.is_dir():
            for path in sorted(finalized_dir.glob("*.json")):
                try:
                    doc = json.loads(path.read_text(encoding="utf-8"))
                    phase = doc["phase"]
                    layer = dact.layer_from_dict(doc)
                except (ValidationError, KeyError, json.JSONDecodeError) as exc:
                    self.load_warnings.append(f"{path.name}: unreadable finalized layer ({exc})")
                    continue
                if layer.trip_id not in self.trajectories:
                    self.load_warnings.append(
                        f"{path.name}: finalized layer references unknown trip {layer.trip_id!r}"
                    )
                    continue
                self.finalized[(layer.trip_id, phase)] = layer

        assignments_path = self.data_dir / "assignments.json"
        if assignments_path.is_file():
            doc = json.loads(assignments_path.read_text(encoding="utf-8"))
            for entry in doc:
                assignment = Assignment(entry["trip_id"], tuple(entry["annotators"]))
                self.assignments[assignment.trip_id] = assignment

    # -- persistence helpers ----------------------------------------------

    def _persist_layer(self, layer: AnnotationLayer) -> None:
        if self.data_dir is None:
            return
        layers_dir = self.data_dir / "layers"
        layers_dir.mkdir(parents=True, exist_ok=True)
        path = layers_dir / f"{_safe_name(layer.trip_id, layer.author)}.json"
        _atomic_write(path, json.dumps(dact.layer_to_dict(layer), indent=2) + "\n")

    def _persist_finalized(self, layer: AnnotationLayer, phase: str) -> None:
        if self.data_dir is None:
            return
        finalized_dir = self.data_dir / "finalized"
        finalized_dir.mkdir(parents=True, exist_ok=True)
        doc = dact.layer_to_dict(layer)
        doc["phase"] = phase
        path = finalized_dir / f"{_safe_name(layer.trip_id, phase)}.json"
        _atomic_write(path, json.dumps(doc, indent=2) + "\n")

    def _persist_assignments(self) -> None:
        if self.data_dir is None:
            return
        doc = [
            {"trip_id": a.trip_id, "annotators": list(a.annotators)}
            for a in sorted(self.assignments.values(), key=lambda a: a.trip_id)
        ]
        _atomic_write(self.data_dir / "assignments.json", json.dumps(doc, indent=2) + "\n")

    # -- operations --------------------------------------------------------

    def trajectory(self, trip_id: str) -> Trajectory:
        try:
            return self.trajectories[trip_id]
        except KeyError:
            raise NotFoundError(f"unknown trip {trip_id!r}") from None

    def trip_layers(self, trip_id: str, author: str | None = None) -> list[AnnotationLayer]:
        self.trajectory(trip_id)
        layers = [
            layer
            for (trip, layer_author), layer in sorted(self.layers.items())
            if trip == trip_id and (author is None or layer_author == author)
        ]
        return layers

    def assign(
        self,
        trip_ids: Sequence[str],
        annotator_ids: Sequence[str],
        seed: int,
        *,
        weights: Mapping[str, float] | None = None,
    ) -> list[Assignment]:
        for trip_id in trip_ids:
            self.trajectory(trip_id)
        assignments = assign_trajectories(trip_ids, annotator_ids, seed, weights=weights)
        with self._state_lock:
            for assignment in assignments:
                self.assignments[assignment.trip_id] = assignment
            self._persist_assignments()
        return assignments

    def _check_author_allowed(self, author: str, trip_id: str) -> None:
        if author == self.aggregator_author:
            return
        assignment = self.assignments.get(trip_id)
        # Unassigned trips are open to any author (desk-scale usage);
        # once assigned, only the two owners and the aggregator may write.
        if assignment is not None and author not in assignment.annotators:
            raise ForbiddenError(f"author {author!r} is not assigned to trip {trip_id!r}")

    def record_mark(
        self,
        author: str,
        trip_id: str,
        time_step: int,
        annotation_type: AnnotationType,
        segment_types: Iterable[SegmentType] = (),
    ) -> AnnotationLayer:
        """Upsert (Segment / Maybe-Segment) or delete (Non-Segment) a mark.

        Non-Segment undoes the author's previous mark at the point and is
        itself never stored; undoing a bare point is a no-op.
        """
        trajectory = self.trajectory(trip_id)
        if not trajectory.has_step(time_step):
            raise NotFoundError(f"trip {trip_id!r} has no point at time_step {time_step}")
        self._check_author_allowed(author, trip_id)

        key = (trip_id, author)
        with self._layer_locks[key]:
            layer = self.layers.get(key, AnnotationLayer(trip_id, author))
            if annotation_type is AnnotationType.NON_SEGMENT:
                layer = layer.without_mark(time_step)
            else:
                mark = AnnotationMark(
                    trip_id, time_step, annotation_type, frozenset(segment_types), author
                )
                layer = layer.with_mark(mark)
            with self._state_lock:
                self.layers[key] = layer
            self._persist_layer(layer)
            return layer

    def suggestions(
        self, trip_id: str, profile: str | ThresholdProfile = "strict"
    ) -> tuple[AutoAnnResult, list[CandidateSegment]]:
        """Machine guidance for one trip; computed fresh, never persisted."""
        trajectory = self.trajectory(trip_id)
        if isinstance(profile, str):
            profile = profile_by_name(profile)
        result = run_autoann(trajectory, self.autoann_config)
        return result, detect_candidates(trajectory, profile)

    def finalize(
        self,
        trip_id: str,
        phase: str,
        decisions: Sequence[MergeDecision],
        *,
        author: str | None = None,
    ) -> AnnotationLayer:
        """Merge the trip's layers (plus machine suggestions) per decisions."""
        if phase not in FINALIZE_PHASES:
            raise ValidationError(f"unknown phase {phase!r}; expected one of {FINALIZE_PHASES}")
        trajectory = self.trajectory(trip_id)
        author = author or self.aggregator_author
        autoann_result, candidates = self.suggestions(trip_id, phase)
        layers = self.trip_layers(trip_id) + [autoann_result.layer]
        finalized = merge_layers(
            trajectory, layers, decisions, candidates=candidates, author=author
        )
        with self._state_lock:
            self.finalized[(trip_id, phase)] = finalized
        self._persist_finalized(finalized, phase)
        return finalized

    def agreement_dataset(self) -> AgreementDataset:
        """Arrange stored layers for agreement analysis.

        Expert-phase layers are those by non-reserved authors; finalized
        layers feed the strict and easy phases.
        """
        per_trip: dict[str, list[AnnotationLayer]] = {}
        for (trip_id, author), layer in sorted(self.layers.items()):
            if author in self.reserved_authors:
                continue
            per_trip.setdefault(trip_id, []).append(layer)
        return AgreementDataset(
            trajectories=dict(self.trajectories),
            annotator_layers=per_trip,
            finalized=dict(self.finalized),
        )
