"""HTTP API backing the annotation portal.

JSON over HTTP, one route per store operation:

* ``GET  /trips``                      catalog of loaded trajectories
* ``GET  /trips/{id}``                 full point list of one trip
* ``GET  /trips/{id}/layers``          annotation layers (optionally by author)
* ``POST /trips/{id}/marks``           record or undo one mark
* ``GET  /trips/{id}/suggestions``     machine marks + threshold candidates
* ``POST /assignments``                distribute trips among annotators
* ``POST /trips/{id}/finalize``        merge layers per aggregator decisions

The store's data directory comes from ``create_app``'s argument or the
``TRAJLAB_DATA_DIR`` environment variable.
"""

from __future__ import annotations

import os
from pathlib import Path
from zoneinfo import ZoneInfo

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import dact
from .aggregation import CandidateSegment, MergeError, decision_from_dict
from .model import AnnotationType, SegmentType, Trajectory, ValidationError
from .store import DATA_DIR_ENV, AnnotationStore, ForbiddenError, NotFoundError


class MarkBody(BaseModel):
    author: str
    time_step: int
    annotation_type: str
    segment_types: list[str] = Field(default_factory=list)


class AssignmentBody(BaseModel):
    trips: list[str]
    annotators: list[str]
    seed: int = 0
    weights: dict[str, float] | None = None


class DecisionBody(BaseModel):
    action: str
    source_author: str | None = None
    source_time_step: int | None = None
    candidate: str | None = None
    time_step: int | None = None
    annotation_type: str | None = None
    segment_types: list[str] | None = None


class FinalizeBody(BaseModel):
    phase: str
    decisions: list[DecisionBody]
    author: str | None = None


def _point_dict(point, zone: ZoneInfo) -> dict:
    return {
        "time_step": point.time_step,
        "timestamp": dact.format_timestamp(point.timestamp, zone),
        "speed": point.speed,
        "acceleration": point.acceleration,
        "heading": point.heading,
        "heading_change": point.heading_change,
        "latitude": point.latitude,
        "longitude": point.longitude,
    }


def _candidate_dict(candidate: CandidateSegment) -> dict:
    return {
        "id": candidate.candidate_id,
        "kind": candidate.kind,
        "begin": candidate.begin,
        "end": candidate.end,
        "suggested_types": [
            t.value for t in sorted(candidate.suggested_types, key=lambda s: s.value)
        ],
        "evidence": candidate.evidence,
    }


def _trip_summary(trajectory: Trajectory, zone: ZoneInfo) -> dict:
    pts = trajectory.points
    return {
        "trip_id": trajectory.trip_id,
        "n": trajectory.n,
        "start": dact.format_timestamp(pts[0].timestamp, zone) if pts else None,
        "end": dact.format_timestamp(pts[-1].timestamp, zone) if pts else None,
    }


def create_app(store: AnnotationStore | None = None) -> FastAPI:
    if store is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
        if data_dir is None:
            raise ValidationError(
                f"no store given and {DATA_DIR_ENV} is not set; nothing to serve"
            )
        store = AnnotationStore(Path(data_dir))
    zone = ZoneInfo(store.tz)
    app = FastAPI(title="trajlab annotation service")
    app.state.store = store
    # The portal is served as static files from another origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _run(operation):
        try:
            return operation()
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ForbiddenError as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from exc
        except MergeError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/trips")
    def list_trips() -> list[dict]:
        return [
            _trip_summary(store.trajectories[trip_id], zone)
            for trip_id in sorted(store.trajectories)
        ]

    @app.get("/trips/{trip_id}")
    def get_trip(trip_id: str) -> dict:
        trajectory = _run(lambda: store.trajectory(trip_id))
        return {
            "trip_id": trajectory.trip_id,
            "n": trajectory.n,
            "points": [_point_dict(p, zone) for p in trajectory.points],
        }

    @app.get("/trips/{trip_id}/layers")
    def get_layers(trip_id: str, author: str | None = Query(default=None)) -> list[dict]:
        layers = _run(lambda: store.trip_layers(trip_id, author))
        return [dact.layer_to_dict(layer) for layer in layers]

    @app.post("/trips/{trip_id}/marks")
    def post_mark(trip_id: str, body: MarkBody) -> dict:
        def operation():
            try:
                annotation = AnnotationType(body.annotation_type)
            except ValueError:
                raise ValidationError(
                    f"unknown annotation type {body.annotation_type!r}"
                ) from None
            try:
                types = frozenset(SegmentType(name) for name in body.segment_types)
            except ValueError as exc:
                raise ValidationError(f"unknown segment type: {exc}") from None
            layer = store.record_mark(body.author, trip_id, body.time_step, annotation, types)
            return dact.layer_to_dict(layer)

        return _run(operation)

    @app.get("/trips/{trip_id}/suggestions")
    def get_suggestions(trip_id: str, profile: str = Query(default="strict")) -> dict:
        result, candidates = _run(lambda: store.suggestions(trip_id, profile))
        return {
            "autoann": dact.layer_to_dict(result.layer),
            "histogram": {t.value: count for t, count in sorted(
                result.type_histogram.items(), key=lambda kv: kv[0].value
            )},
            "candidates": [_candidate_dict(c) for c in candidates],
        }

    @app.post("/assignments")
    def post_assignments(body: AssignmentBody) -> list[dict]:
        assignments = _run(
            lambda: store.assign(body.trips, body.annotators, body.seed, weights=body.weights)
        )
        return [{"trip_id": a.trip_id, "annotators": list(a.annotators)} for a in assignments]

    @app.post("/trips/{trip_id}/finalize")
    def post_finalize(trip_id: str, body: FinalizeBody) -> dict:
        def operation():
            decisions = [
                decision_from_dict(d.model_dump(exclude_none=True)) for d in body.decisions
            ]
            layer = store.finalize(trip_id, body.phase, decisions, author=body.author)
            doc = dact.layer_to_dict(layer)
            doc["phase"] = body.phase
            return doc

        return _run(operation)

    return app
