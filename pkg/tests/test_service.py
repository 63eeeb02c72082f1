import pytest
from fastapi.testclient import TestClient

from trajlab.service import create_app
from trajlab.store import AnnotationStore

from conftest import make_trajectory, write_corpus

SLOWDOWN_SERIES = [20.0, 18, 16, 14, 12, 10, 12, 14, 16, 18, 20, 22, 24]


@pytest.fixture
def client(tmp_path):
    trips = [
        make_trajectory("T-1", n=60, spacing_m=20.0),
        make_trajectory("T-2", speeds=SLOWDOWN_SERIES),
    ]
    write_corpus(tmp_path, trips)
    store = AnnotationStore(tmp_path)
    return TestClient(create_app(store))


class TestTripEndpoints:
    def test_list_trips(self, client):
        body = client.get("/trips").json()
        assert [t["trip_id"] for t in body] == ["T-1", "T-2"]
        assert body[0]["n"] == 60
        assert body[0]["start"].startswith("2017-06-01 12:00:00")
        assert body[0]["end"].startswith("2017-06-01 12:00:59")

    def test_get_trip_points(self, client):
        body = client.get("/trips/T-2").json()
        assert body["n"] == len(SLOWDOWN_SERIES)
        first = body["points"][0]
        assert set(first) == {
            "time_step", "timestamp", "speed", "acceleration",
            "heading", "heading_change", "latitude", "longitude",
        }
        assert first["time_step"] == 1
        assert first["speed"] == 20.0

    def test_unknown_trip_404(self, client):
        assert client.get("/trips/none").status_code == 404


class TestMarks:
    def test_record_then_undo(self, client):
        created = client.post(
            "/trips/T-1/marks",
            json={
                "author": "alice",
                "time_step": 12,
                "annotation_type": "Segment",
                "segment_types": ["Turn"],
            },
        )
        assert created.status_code == 200
        assert created.json()["marks"] == [
            {"time_step": 12, "annotation_type": "Segment", "segment_types": ["Turn"]}
        ]
        undone = client.post(
            "/trips/T-1/marks",
            json={"author": "alice", "time_step": 12, "annotation_type": "Non-Segment"},
        )
        assert undone.status_code == 200
        assert undone.json()["marks"] == []

    def test_upsert_replaces(self, client):
        for types in (["Speed-Up"], ["Merge"]):
            response = client.post(
                "/trips/T-1/marks",
                json={
                    "author": "alice",
                    "time_step": 12,
                    "annotation_type": "Segment",
                    "segment_types": types,
                },
            )
        assert response.json()["marks"][0]["segment_types"] == ["Merge"]

    def test_layers_filter_by_author(self, client):
        for author in ("alice", "bob"):
            client.post(
                "/trips/T-1/marks",
                json={
                    "author": author,
                    "time_step": 10,
                    "annotation_type": "Segment",
                    "segment_types": ["Exit"],
                },
            )
        all_layers = client.get("/trips/T-1/layers").json()
        assert {l["author"] for l in all_layers} == {"alice", "bob"}
        only_bob = client.get("/trips/T-1/layers", params={"author": "bob"}).json()
        assert [l["author"] for l in only_bob] == ["bob"]

    def test_unknown_segment_type_422(self, client):
        response = client.post(
            "/trips/T-1/marks",
            json={
                "author": "alice",
                "time_step": 12,
                "annotation_type": "Segment",
                "segment_types": ["Zoom"],
            },
        )
        assert response.status_code == 422

    def test_empty_types_422(self, client):
        response = client.post(
            "/trips/T-1/marks",
            json={"author": "alice", "time_step": 12, "annotation_type": "Segment"},
        )
        assert response.status_code == 422

    def test_unknown_point_404(self, client):
        response = client.post(
            "/trips/T-1/marks",
            json={
                "author": "alice",
                "time_step": 999,
                "annotation_type": "Segment",
                "segment_types": ["Turn"],
            },
        )
        assert response.status_code == 404

    def test_forbidden_after_assignment(self, client):
        client.post(
            "/assignments", json={"trips": ["T-1"], "annotators": ["alice", "bob"], "seed": 1}
        )
        response = client.post(
            "/trips/T-1/marks",
            json={
                "author": "mallory",
                "time_step": 5,
                "annotation_type": "Segment",
                "segment_types": ["Turn"],
            },
        )
        assert response.status_code == 403


class TestSuggestions:
    def test_autoann_passthrough(self, client):
        body = client.get("/trips/T-2/suggestions", params={"profile": "strict"}).json()
        steps = [m["time_step"] for m in body["autoann"]["marks"]]
        assert steps == [6]  # the slow-down trough
        assert body["autoann"]["author"] == "AutoAnn"
        assert body["histogram"] == {"Slow-Down": 1}
        assert any(c["kind"] == "speed" for c in body["candidates"])

    def test_profile_changes_candidates(self, client):
        strict = client.get("/trips/T-2/suggestions", params={"profile": "strict"}).json()
        easy = client.get("/trips/T-2/suggestions", params={"profile": "easy"}).json()
        assert len(strict["candidates"]) >= len(easy["candidates"])

    def test_unknown_trip_404(self, client):
        assert client.get("/trips/none/suggestions").status_code == 404


class TestAssignmentsAndFinalize:
    def test_assignments_deterministic(self, client):
        payload = {"trips": ["T-1", "T-2"], "annotators": ["a", "b", "c"], "seed": 7}
        first = client.post("/assignments", json=payload).json()
        second = client.post("/assignments", json=payload).json()
        assert first == second
        for entry in first:
            assert len(set(entry["annotators"])) == 2

    def test_too_few_annotators_422(self, client):
        response = client.post(
            "/assignments", json={"trips": ["T-1"], "annotators": ["solo"], "seed": 0}
        )
        assert response.status_code == 422

    def test_finalize_identity_flow(self, client):
        client.post(
            "/trips/T-1/marks",
            json={
                "author": "alice",
                "time_step": 10,
                "annotation_type": "Segment",
                "segment_types": ["Turn"],
            },
        )
        response = client.post(
            "/trips/T-1/finalize",
            json={
                "phase": "strict",
                "decisions": [
                    {"action": "accept", "source_author": "alice", "source_time_step": 10}
                ],
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["author"] == "aggregator"
        assert body["phase"] == "strict"
        assert body["marks"] == [
            {"time_step": 10, "annotation_type": "Segment", "segment_types": ["Turn"]}
        ]

    def test_finalize_conflict_409(self, client):
        for author, annot in (("alice", "Segment"), ("bob", "Maybe-Segment")):
            client.post(
                "/trips/T-1/marks",
                json={
                    "author": author,
                    "time_step": 10,
                    "annotation_type": annot,
                    "segment_types": ["Turn"],
                },
            )
        response = client.post(
            "/trips/T-1/finalize",
            json={
                "phase": "strict",
                "decisions": [
                    {"action": "accept", "source_author": "alice", "source_time_step": 10},
                    {"action": "accept", "source_author": "bob", "source_time_step": 10},
                ],
            },
        )
        assert response.status_code == 409
        assert "tie-break" in response.json()["detail"]

    def test_finalize_refine_candidate(self, client):
        suggestions = client.get("/trips/T-2/suggestions", params={"profile": "strict"}).json()
        candidate = suggestions["candidates"][0]
        response = client.post(
            "/trips/T-2/finalize",
            json={
                "phase": "strict",
                "decisions": [{"action": "accept", "candidate": candidate["id"]}],
            },
        )
        assert response.status_code == 200
        (mark,) = response.json()["marks"]
        assert mark["time_step"] == candidate["end"]
