from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajlab.dact import (
    DactFormatError,
    layer_from_dict,
    layer_to_dict,
    parse_dact,
    validate_quality,
    write_dact,
    write_dact_corpus,
)
from trajlab.model import (
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    TrajectoryPoint,
    ValidationError,
)

from conftest import BASE_UTC, make_trajectory, make_layer

HEADER = (
    "TripID,TimeStep,TimeStamp,Speed,Acceleration,Heading,HeadingChange,"
    "Latitude,Longitude,Annotation,SegmentType"
)


def dact_text(*rows: str) -> str:
    return HEADER + "\n" + "\n".join(rows) + "\n"


# Golden fixture built by hand from the column descriptions: an 8-point
# trip annotated Speed-Up at step 7.  Wall-clock times are US Eastern.
GOLDEN = dact_text(
    "T-7,1,2017-06-01 12:00:00,10.0,0.0,0.0,0.0,39.96,-83.0,,",
    "T-7,2,2017-06-01 12:00:01,12.0,0.89408,0.0,0.0,39.9601,-83.0,,",
    "T-7,3,2017-06-01 12:00:02,14.0,0.89408,0.0,0.0,39.9602,-83.0,,",
    "T-7,4,2017-06-01 12:00:03,16.0,0.89408,0.0,0.0,39.9603,-83.0,,",
    "T-7,5,2017-06-01 12:00:04,18.0,0.89408,0.0,0.0,39.9604,-83.0,,",
    "T-7,6,2017-06-01 12:00:05,20.0,0.89408,0.0,0.0,39.9605,-83.0,,",
    "T-7,7,2017-06-01 12:00:06,22.0,0.89408,0.0,0.0,39.9606,-83.0,Segment,Speed-Up",
    "T-7,8,2017-06-01 12:00:07,24.0,0.89408,0.0,0.0,39.9607,-83.0,,",
)


_GOLDEN_LATITUDES = (39.96, 39.9601, 39.9602, 39.9603, 39.9604, 39.9605, 39.9606, 39.9607)


def golden_trajectory() -> Trajectory:
    points = []
    for i in range(8):
        points.append(
            TrajectoryPoint(
                time_step=i + 1,
                timestamp=datetime(2017, 6, 1, 16, 0, i, tzinfo=timezone.utc),
                speed=10.0 + 2.0 * i,
                acceleration=0.0 if i == 0 else 0.89408,
                heading=0.0,
                heading_change=0.0,
                latitude=_GOLDEN_LATITUDES[i],
                longitude=-83.0,
            )
        )
    return Trajectory("T-7", tuple(points))


class TestGoldenFile:
    def test_write_matches_golden(self):
        trip = golden_trajectory()
        layer = make_layer(trip, "dact", [(7, SegmentType.SPEED_UP)])
        assert write_dact(trip, layer) == GOLDEN

    def test_parse_recovers_golden_values(self):
        result = parse_dact(GOLDEN)
        assert [t.trip_id for t in result.trajectories] == ["T-7"]
        assert result.reports[0].verdict == "accept"
        trip = result.trajectory("T-7")
        assert trip == golden_trajectory()
        (mark,) = result.layer("T-7").marks
        assert mark.time_step == 7
        assert mark.annotation_type is AnnotationType.SEGMENT
        assert mark.segment_types == frozenset({SegmentType.SPEED_UP})


class TestParse:
    def test_multi_type_cell_splits_on_semicolon(self):
        text = dact_text(
            "A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,Segment,Exit;Slow-Down"
        )
        (mark,) = parse_dact(text).layer("A").marks
        assert mark.segment_types == frozenset({SegmentType.EXIT, SegmentType.SLOW_DOWN})

    def test_empty_annotation_yields_point_only(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,")
        result = parse_dact(text)
        assert result.trajectory("A").n == 1
        assert result.layer("A").marks == ()

    def test_literal_null_accepted(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,NULL,NULL")
        result = parse_dact(text)
        assert result.layer("A").marks == ()
        assert result.reports[0].verdict == "accept"

    def test_missing_point_rejects(self):
        text = dact_text(
            "A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,",
            "A,2,2017-06-01 12:00:01,30.0,0.0,0.0,0.0,39.96,-83.0,,",
            "A,4,2017-06-01 12:00:03,30.0,0.0,0.0,0.0,39.96,-83.0,,",
        )
        report = parse_dact(text).reports[0]
        assert report.verdict == "reject"
        assert any("missing point at step 3" in i.message for i in report.issues)

    def test_malformed_header_is_fatal(self):
        with pytest.raises(DactFormatError, match="malformed header"):
            parse_dact("TripID,Speed\nA,30\n")

    def test_unknown_annotation_reported(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,Perhaps,Turn")
        report = parse_dact(text).reports[0]
        assert any(i.rule == "unknown-annotation" for i in report.issues)
        assert report.verdict == "reject"

    def test_non_segment_never_parses_as_mark(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,Non-Segment,Turn")
        result = parse_dact(text)
        assert result.layer("A").marks == ()
        assert any(i.rule == "unknown-annotation" for i in result.reports[0].issues)

    def test_unknown_segment_type_reported(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,Segment,Wiggle")
        report = parse_dact(text).reports[0]
        assert any(i.rule == "unknown-segment-type" for i in report.issues)

    def test_segment_type_without_annotation_reported(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,Turn")
        report = parse_dact(text).reports[0]
        assert any(i.rule == "annotation-consistency" for i in report.issues)

    def test_duplicate_step_keeps_first(self):
        text = dact_text(
            "A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,",
            "A,1,2017-06-01 12:00:00,99.0,0.0,0.0,0.0,39.96,-83.0,,",
        )
        result = parse_dact(text)
        assert result.trajectory("A").points[0].speed == 30.0
        assert any(i.rule == "duplicate-step" for i in result.reports[0].issues)

    def test_non_numeric_field_reported(self):
        text = dact_text("A,1,2017-06-01 12:00:00,fast,0.0,0.0,0.0,39.96,-83.0,,")
        report = parse_dact(text).reports[0]
        assert any(i.rule == "non-numeric" for i in report.issues)

    def test_row_shape_reported(self):
        text = dact_text("A,1,2017-06-01 12:00:00,30.0,0.0")
        report = parse_dact(text).reports[0]
        assert any(i.rule == "row-shape" for i in report.issues)

    def test_interleaved_trips_group_in_file_order(self):
        text = dact_text(
            "B,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,",
            "A,1,2017-06-01 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,",
            "B,2,2017-06-01 12:00:01,31.0,0.0,0.0,0.0,39.9601,-83.0,,",
        )
        result = parse_dact(text)
        assert [t.trip_id for t in result.trajectories] == ["B", "A"]
        assert [p.time_step for p in result.trajectory("B").points] == [1, 2]

    def test_eastern_winter_and_summer_offsets(self):
        text = dact_text(
            "A,1,2017-01-15 12:00:00,30.0,0.0,0.0,0.0,39.96,-83.0,,",
        )
        point = parse_dact(text).trajectory("A").points[0]
        assert point.timestamp == datetime(2017, 1, 15, 17, 0, tzinfo=timezone.utc)
        summer = parse_dact(GOLDEN).trajectory("T-7").points[0]
        assert summer.timestamp == datetime(2017, 6, 1, 16, 0, tzinfo=timezone.utc)


class TestValidateQuality:
    def test_clean_trip_accepts_with_no_issues(self):
        report = validate_quality(make_trajectory(n=60))
        assert report.verdict == "accept"
        assert report.issues == ()

    def test_two_second_gap_rejects(self):
        trip = make_trajectory(n=10)
        points = list(trip.points)
        bad = points[5]
        points[5] = TrajectoryPoint(
            bad.time_step, bad.timestamp + timedelta(seconds=1), bad.speed,
            bad.acceleration, bad.heading, bad.heading_change, bad.latitude, bad.longitude,
        )
        # Shift the tail so only one delta is wrong.
        for i in range(6, 10):
            p = points[i]
            points[i] = TrajectoryPoint(
                p.time_step, p.timestamp + timedelta(seconds=1), p.speed,
                p.acceleration, p.heading, p.heading_change, p.latitude, p.longitude,
            )
        report = validate_quality(Trajectory(trip.trip_id, tuple(points)))
        assert report.verdict == "reject"
        assert any(i.rule == "sampling-rate" for i in report.issues)

    def test_latitude_out_of_range_rejects(self):
        trip = make_trajectory(n=3, positions=[(39.0, -83.0), (91.0, -83.0), (39.1, -83.0)])
        report = validate_quality(trip)
        assert report.verdict == "reject"
        assert any(i.rule == "range" and "latitude" in i.message for i in report.issues)

    def test_constant_position_is_advisory_only(self):
        trip = make_trajectory(n=5, positions=[(39.0, -83.0)] * 5)
        report = validate_quality(trip)
        assert report.verdict == "accept"
        assert any(i.rule == "constant-position" and not i.fatal for i in report.issues)

    def test_zero_length_is_advisory(self):
        report = validate_quality(Trajectory("empty", ()))
        assert report.verdict == "accept"
        assert any(i.rule == "zero-length" for i in report.issues)


class TestWrite:
    def test_empty_layer_leaves_annotation_cells_empty(self):
        trip = make_trajectory(n=3)
        text = write_dact(trip, AnnotationLayer(trip.trip_id, "dact"))
        for line in text.splitlines()[1:]:
            assert line.endswith(",,")

    def test_mark_on_missing_step_raises(self):
        trip = make_trajectory(n=3)
        layer = make_layer(trip, "dact", [(9, SegmentType.TURN)])
        with pytest.raises(ValidationError, match="references no point"):
            write_dact(trip, layer)

    def test_non_segment_is_never_persisted(self):
        trip = make_trajectory(n=3)
        layer = make_layer(trip, "dact", [(2, SegmentType.TURN, AnnotationType.NON_SEGMENT)])
        with pytest.raises(ValidationError, match="Non-Segment"):
            write_dact(trip, layer)

    def test_foreign_layer_rejected(self):
        trip = make_trajectory(n=3)
        with pytest.raises(ValidationError, match="does not belong"):
            write_dact(trip, AnnotationLayer("other", "dact"))


# --- generated round-trip fixtures -------------------------------------

trip_ids = st.from_regex(r"[A-Z][A-Za-z0-9_-]{0,7}", fullmatch=True)
bounded = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


@st.composite
def trajectory_and_layer(draw):
    trip_id = draw(trip_ids)
    n = draw(st.integers(min_value=1, max_value=40))
    start = BASE_UTC + timedelta(seconds=draw(st.integers(0, 10**6)))
    points = []
    for i in range(n):
        points.append(
            TrajectoryPoint(
                time_step=i + 1,
                timestamp=start + timedelta(seconds=i),
                speed=draw(st.floats(0, 120, allow_nan=False)),
                acceleration=draw(st.floats(-12, 12, allow_nan=False)),
                heading=draw(st.floats(0, 360, exclude_max=True, allow_nan=False)),
                heading_change=draw(st.floats(0, 180, allow_nan=False)),
                latitude=draw(st.floats(-90, 90, allow_nan=False)),
                longitude=draw(st.floats(-180, 180, allow_nan=False)),
            )
        )
    trajectory = Trajectory(trip_id, tuple(points))
    steps = draw(st.sets(st.integers(1, n), max_size=min(n, 6)))
    marks = []
    for step in sorted(steps):
        annot = draw(st.sampled_from([AnnotationType.SEGMENT, AnnotationType.MAYBE_SEGMENT]))
        types = draw(
            st.sets(st.sampled_from(list(SegmentType)), min_size=1, max_size=3)
        )
        marks.append(AnnotationMark(trip_id, step, annot, frozenset(types), "dact"))
    return trajectory, AnnotationLayer(trip_id, "dact", tuple(marks))


class TestRoundTrip:
    @settings(max_examples=60, deadline=None)
    @given(trajectory_and_layer())
    def test_write_then_parse_is_identity(self, pair):
        trajectory, layer = pair
        text = write_dact(trajectory, layer)
        result = parse_dact(text)
        assert result.trajectories == (trajectory,)
        assert result.layers == (layer,)
        assert write_dact(*pair) == text  # re-serialization is byte-identical

    def test_corpus_write_groups_by_trip(self):
        t1 = make_trajectory("A", n=3)
        t2 = make_trajectory("B", n=2)
        text = write_dact_corpus([(t1, None), (t2, None)])
        result = parse_dact(text)
        assert [t.trip_id for t in result.trajectories] == ["A", "B"]


class TestSidecar:
    def test_dict_round_trip(self):
        trip = make_trajectory(n=10)
        layer = make_layer(
            trip,
            "alice",
            [
                (3, {SegmentType.EXIT, SegmentType.SLOW_DOWN}),
                (8, SegmentType.TURN, AnnotationType.MAYBE_SEGMENT),
            ],
        )
        doc = layer_to_dict(layer)
        assert doc["marks"][0]["segment_types"] == ["Exit", "Slow-Down"]
        assert layer_from_dict(doc) == layer

    def test_unknown_type_rejected(self):
        doc = {
            "trip_id": "A",
            "author": "alice",
            "marks": [{"time_step": 1, "annotation_type": "Segment", "segment_types": ["Zoom"]}],
        }
        with pytest.raises(ValidationError, match="Zoom"):
            layer_from_dict(doc)
