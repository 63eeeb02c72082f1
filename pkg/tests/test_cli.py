import json

import pytest

from trajlab.cli import run
from trajlab.dact import parse_dact, write_dact
from trajlab.model import AnnotationType, SegmentType
from trajlab.store import AnnotationStore

from conftest import make_trajectory, write_corpus

SLOWDOWN_SERIES = [20.0, 18, 16, 14, 12, 10, 12, 14, 16, 18, 20, 22, 24]


@pytest.fixture
def corpus(tmp_path):
    trips = [
        make_trajectory("T-1", n=60, spacing_m=20.0),
        make_trajectory("T-2", speeds=SLOWDOWN_SERIES),
    ]
    write_corpus(tmp_path, trips)
    return tmp_path


def invoke(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_clean_corpus_accepts(self, corpus, capsys):
        code, out, _ = invoke(capsys, "validate", str(corpus))
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "trip_id,verdict,issues"
        assert "T-1,accept,0" in lines
        assert "T-2,accept,0" in lines

    def test_rejects_exit_one(self, tmp_path, capsys):
        trip = make_trajectory("BAD", n=10)
        from trajlab.model import Trajectory

        broken = Trajectory("BAD", tuple(p for p in trip.points if p.time_step != 3))
        (tmp_path / "bad.csv").write_text(write_dact(broken), encoding="utf-8")
        code, out, err = invoke(capsys, "validate", str(tmp_path))
        assert code == 1
        assert "BAD,reject" in out
        assert "missing point at step 3" in err

    def test_json_mode(self, corpus, capsys):
        code, out, _ = invoke(capsys, "validate", "--json", str(corpus))
        assert code == 0
        docs = json.loads(out)
        assert {d["trip_id"] for d in docs} == {"T-1", "T-2"}

    def test_missing_path_is_error(self, capsys):
        code, _, err = invoke(capsys, "validate", "/nonexistent/corpus")
        assert code == 1
        assert "no such file" in err


class TestAutoann:
    def test_marks_match_library_run(self, corpus, capsys):
        code, out, _ = invoke(capsys, "autoann", "--k", "5", str(corpus / "trips.csv"))
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "trip_id,time_step,annotation_type,segment_types"
        assert "T-2,6,Segment,Slow-Down" in lines

    def test_custom_threshold_changes_labels(self, corpus, capsys):
        # Raising the low-speed threshold above the trough reclassifies
        # the slow-down as a traffic jam.
        code, out, _ = invoke(
            capsys,
            "autoann",
            "--low-speed-threshold",
            "11",
            str(corpus / "trips.csv"),
        )
        assert code == 0
        assert "T-2,6,Segment,Traffic-Jam" in out.splitlines()

    def test_config_file(self, corpus, tmp_path, capsys):
        config = tmp_path / "autoann.conf"
        config.write_text("k = 5\nlow_speed_threshold = 11\n", encoding="utf-8")
        code, out, _ = invoke(capsys, "autoann", "--config", str(config), str(corpus / "trips.csv"))
        assert code == 0
        assert "T-2,6,Segment,Traffic-Jam" in out.splitlines()

    def test_deterministic_stdout(self, corpus, capsys):
        _, first, _ = invoke(capsys, "autoann", str(corpus / "trips.csv"))
        _, second, _ = invoke(capsys, "autoann", str(corpus / "trips.csv"))
        assert first == second


class TestCandidates:
    def test_strict_profile(self, corpus, capsys):
        code, out, _ = invoke(
            capsys, "candidates", "--profile", "strict", str(corpus / "trips.csv")
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "trip_id,kind,begin,end,suggested_types,evidence"
        assert "T-2,speed,1,6,Slow-Down,10" in lines

    def test_easy_profile_filters(self, corpus, capsys):
        _, strict_out, _ = invoke(
            capsys, "candidates", "--profile", "strict", str(corpus / "trips.csv")
        )
        _, easy_out, _ = invoke(
            capsys, "candidates", "--profile", "easy", str(corpus / "trips.csv")
        )
        assert len(easy_out.splitlines()) <= len(strict_out.splitlines())


class TestAgreement:
    def test_identical_layers_report_kappa_one(self, corpus, capsys):
        store = AnnotationStore(corpus)
        for author in ("alice", "bob"):
            store.record_mark(author, "T-1", 10, AnnotationType.SEGMENT, {SegmentType.TURN})
            store.record_mark(author, "T-1", 40, AnnotationType.SEGMENT, {SegmentType.EXIT})
        code, out, _ = invoke(
            capsys, "agreement", str(corpus), "--phase", "expert", "--tau", "50"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "tau,phase,trip_id,author_a,author_b,a,b,c,d,kappa,overlap"
        assert "50,expert,T-1,alice,bob,2,0,0,58,1.000000,1.000000" in lines
        assert lines[-1].startswith("50,expert,*,*,*")

    def test_sweep_defaults(self, corpus, capsys):
        store = AnnotationStore(corpus)
        for author in ("alice", "bob"):
            store.record_mark(author, "T-1", 10, AnnotationType.SEGMENT, {SegmentType.TURN})
        code, out, _ = invoke(capsys, "agreement", str(corpus), "--phase", "expert")
        assert code == 0
        taus = {line.split(",")[0] for line in out.splitlines()[1:]}
        assert taus == {"10", "25", "50", "100", "200"}


class TestMergeAndExport:
    def test_merge_writes_finalized_layer(self, corpus, tmp_path, capsys):
        store = AnnotationStore(corpus)
        store.record_mark("alice", "T-1", 10, AnnotationType.SEGMENT, {SegmentType.TURN})
        decisions = {
            "trip_id": "T-1",
            "decisions": [
                {"action": "accept", "source_author": "alice", "source_time_step": 10}
            ],
        }
        decisions_path = tmp_path / "decisions.json"
        decisions_path.write_text(json.dumps(decisions), encoding="utf-8")
        code, out, _ = invoke(
            capsys,
            "merge",
            str(corpus),
            "--trip",
            "T-1",
            "--decisions",
            str(decisions_path),
            "--phase",
            "strict",
            "--write",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["marks"][0]["time_step"] == 10
        reloaded = AnnotationStore(corpus)
        assert ("T-1", "strict") in reloaded.finalized

    def test_export_round_trips(self, corpus, capsys):
        store = AnnotationStore(corpus)
        store.record_mark("alice", "T-1", 10, AnnotationType.SEGMENT, {SegmentType.TURN})
        code, out, _ = invoke(capsys, "export", str(corpus), "T-1", "--author", "alice")
        assert code == 0
        result = parse_dact(out)
        assert result.trajectory("T-1").n == 60
        (mark,) = result.layer("T-1").marks
        assert mark.time_step == 10

    def test_export_all_bare(self, corpus, capsys):
        code, out, _ = invoke(capsys, "export", str(corpus))
        assert code == 0
        result = parse_dact(out)
        assert [t.trip_id for t in result.trajectories] == ["T-1", "T-2"]


class TestUsage:
    def test_unknown_flag_exits_two(self, corpus, capsys):
        code, _, err = invoke(capsys, "validate", "--frobnicate", str(corpus))
        assert code == 2
        assert "usage" in err.lower()

    def test_no_subcommand_exits_two(self, capsys):
        code, _, _ = invoke(capsys)
        assert code == 2

    def test_help_exits_zero(self, capsys):
        code, out, _ = invoke(capsys, "--help")
        assert code == 0
