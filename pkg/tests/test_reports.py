import json

import pytest

from restrictlab import PrdcScores, TrainConfig, run_experiment
from restrictlab.reports import (
    ReportBundle,
    ReportError,
    emit_report,
    experiment_from_dict,
    experiment_to_dict,
    read_report,
    scores_from_dict,
    scores_to_dict,
    write_json,
)


def small_report(seed=0):
    cfg = TrainConfig(condition="proposed", seed=seed, steps=12)
    return run_experiment(cfg)[1]


def tree_bytes(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestExperimentSerialization:

    def test_round_trip_is_bit_exact(self):
        report = small_report()
        payload = experiment_to_dict(report)
        back = experiment_from_dict(json.loads(json.dumps(payload)))
        assert experiment_to_dict(back) == payload

    def test_manifest_fields_present(self):
        payload = experiment_to_dict(small_report())
        assert payload["manifest"]["tool"] == "restrictlab"
        assert payload["manifest"]["kind"] == "experiment"
        assert "version" in payload["manifest"]

    def test_missing_key_raises(self):
        payload = experiment_to_dict(small_report())
        del payload["hist_freqs"]
        with pytest.raises(ReportError):
            experiment_from_dict(payload)


class TestScoresSerialization:

    def test_round_trip(self):
        scores = PrdcScores(precision=0.5, recall=1.0, density=0.9, coverage=0.75)
        payload = scores_to_dict(scores, k=5, n_real=100, n_fake=100)
        back = scores_from_dict(payload)
        assert back == scores

    def test_contains_exactly_four_score_keys(self):
        scores = PrdcScores(precision=1.0, recall=1.0, density=1.0, coverage=1.0)
        d = scores.to_dict()
        assert set(d) == {"precision", "recall", "density", "coverage"}


class TestEmitExperimentReport:

    def test_same_report_twice_is_byte_identical(self, tmp_path):
        report = small_report()
        a, b = tmp_path / "a", tmp_path / "b"
        emit_report(report, a)
        emit_report(report, b)
        assert tree_bytes(a) == tree_bytes(b)

    def test_one_histogram_csv_per_dimension(self, tmp_path):
        report = small_report()
        bundle = emit_report(report, tmp_path / "out")
        hist_csvs = [p for p in bundle.paths if p.name.startswith("hist_dim")]
        assert len(hist_csvs) == 8
        assert {p.name for p in hist_csvs} == {f"hist_dim{i}.csv" for i in range(8)}

    def test_bundle_contents(self, tmp_path):
        bundle = emit_report(small_report(), tmp_path / "out")
        names = {p.name for p in bundle.paths}
        assert "report.json" in names
        assert "corr.csv" in names
        assert {"histograms.svg", "corr.svg", "trace.svg"} <= names
        loaded = read_report(tmp_path / "out" / "report.json")
        assert loaded["manifest"] == bundle.manifest

    def test_report_json_round_trips_through_emit(self, tmp_path):
        report = small_report()
        emit_report(report, tmp_path / "out")
        loaded = experiment_from_dict(read_report(tmp_path / "out" / "report.json"))
        assert experiment_to_dict(loaded) == experiment_to_dict(report)


class TestEmitScoresReport:

    def test_scores_json_has_score_keys(self, tmp_path):
        scores = PrdcScores(precision=0.5, recall=0.25, density=0.4, coverage=0.3)
        bundle = emit_report(scores, tmp_path / "out", config={"k": 5, "n_real": 10, "n_fake": 20})
        payload = read_report(tmp_path / "out" / "scores.json")
        assert {"precision", "recall", "density", "coverage"} <= set(payload)
        assert payload["k"] == 5
        names = {p.name for p in bundle.paths}
        assert {"scores.json", "scores.csv", "scores.svg"} <= names

    def test_deterministic(self, tmp_path):
        scores = PrdcScores(precision=0.5, recall=0.25, density=0.4, coverage=0.3)
        a, b = tmp_path / "a", tmp_path / "b"
        emit_report(scores, a, config={"k": 3, "n_real": 4, "n_fake": 4})
        emit_report(scores, b, config={"k": 3, "n_real": 4, "n_fake": 4})
        assert tree_bytes(a) == tree_bytes(b)


class TestReportPlumbing:

    def test_write_json_is_stable(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json({"b": 1, "a": [1.5, 2.5]}, p1)
        write_json({"a": [1.5, 2.5], "b": 1}, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text().endswith("\n")

    def test_read_report_rejects_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ReportError):
            read_report(path)

    def test_bundle_requires_existing_paths(self, tmp_path):
        with pytest.raises(ReportError):
            ReportBundle(manifest={}, paths=(tmp_path / "missing.json",))
