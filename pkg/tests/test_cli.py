import json

import numpy as np
import pytest

from restrictlab import seeded_standard_normal, write_batch_csv, write_batch_fbv
from restrictlab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def stdout_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def tree_bytes(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture
def batch_csv(tmp_path):
    path = tmp_path / "batch.csv"
    write_batch_csv(seeded_standard_normal(64, 4, seed=0), path)
    return path


class TestLossesEval:
    def test_reports_all_loss_values(self, capsys, batch_csv):
        payload = stdout_json(capsys, "losses", "eval", "--input", str(batch_csv))
        for key in ("conventional_kl", "batch_kl", "correlation", "histogram_imitation"):
            assert payload[key] >= 0.0
        assert payload["n"] == 64
        assert payload["d"] == 4
        assert payload["restriction_total"] > 0.0

    def test_out_writes_losses_json(self, capsys, batch_csv, tmp_path):
        out = tmp_path / "report"
        payload = stdout_json(
            capsys, "losses", "eval", "--input", str(batch_csv), "--out", str(out)
        )
        stored = json.loads((out / "losses.json").read_text())
        assert stored["batch_kl"] == payload["batch_kl"]

    def test_missing_input_is_error_json(self, capsys, tmp_path):
        code, out, err = run_cli(
            capsys, "losses", "eval", "--input", str(tmp_path / "nope.csv")
        )
        assert code == 1
        assert out == ""
        message = json.loads(err)
        assert "error" in message and "message" in message

    def test_unknown_weights_preset(self, capsys, batch_csv):
        code, _, err = run_cli(
            capsys, "losses", "eval", "--input", str(batch_csv), "--weights", "bogus"
        )
        assert code == 1
        assert json.loads(err)["error"] == "ValueError"


class TestLossesTotal:
    def test_all_ones_proposed_weights(self, capsys, tmp_path):
        components = {
            name: 1.0
            for name in (
                "adv",
                "cycle",
                "idt",
                "reg",
                "idt_reg",
                "class",
                "kl",
                "bkl",
                "corr_enc",
                "hist",
            )
        }
        path = tmp_path / "components.json"
        path.write_text(json.dumps(components))
        payload = stdout_json(
            capsys, "losses", "total", "--components", str(path), "--weights", "proposed"
        )
        assert payload["total"] == pytest.approx(222.5, abs=1e-12)

    def test_rejects_non_object(self, capsys, tmp_path):
        path = tmp_path / "components.json"
        path.write_text("[1, 2, 3]")
        code, _, err = run_cli(capsys, "losses", "total", "--components", str(path))
        assert code == 1
        assert json.loads(err)["error"] == "ValueError"


class TestPrdc:
    def test_identical_sets(self, capsys, tmp_path):
        batch = seeded_standard_normal(40, 3, seed=0)
        real, fake = tmp_path / "real.fbv", tmp_path / "fake.fbv"
        write_batch_fbv(batch, real)
        write_batch_fbv(batch, fake)
        payload = stdout_json(
            capsys, "prdc", "--real", str(real), "--fake", str(fake), "--k", "3"
        )
        assert payload["precision"] == 1.0
        assert payload["recall"] == 1.0
        assert payload["coverage"] == 1.0
        assert payload["k"] == 3
        assert payload["n_real"] == payload["n_fake"] == 40

    def test_out_json_file(self, capsys, tmp_path):
        write_batch_fbv(seeded_standard_normal(20, 2, seed=0), tmp_path / "r.fbv")
        write_batch_fbv(seeded_standard_normal(20, 2, seed=1), tmp_path / "f.fbv")
        scores_path = tmp_path / "scores.json"
        payload = stdout_json(
            capsys,
            "prdc",
            "--real",
            str(tmp_path / "r.fbv"),
            "--fake",
            str(tmp_path / "f.fbv"),
            "--out",
            str(scores_path),
        )
        stored = json.loads(scores_path.read_text())
        assert stored["precision"] == payload["precision"]
        assert stored["k"] == 5

    def test_out_directory_bundle(self, capsys, tmp_path):
        write_batch_fbv(seeded_standard_normal(20, 2, seed=0), tmp_path / "r.fbv")
        write_batch_fbv(seeded_standard_normal(20, 2, seed=1), tmp_path / "f.fbv")
        out = tmp_path / "bundle"
        payload = stdout_json(
            capsys,
            "prdc",
            "--real",
            str(tmp_path / "r.fbv"),
            "--fake",
            str(tmp_path / "f.fbv"),
            "--out",
            str(out),
        )
        names = {p.rsplit("/", 1)[-1] for p in payload["artifacts"]}
        assert {"scores.json", "scores.csv", "scores.svg"} <= names
        assert (out / "scores.svg").exists()

    def test_k_must_fit(self, capsys, tmp_path):
        write_batch_fbv(seeded_standard_normal(4, 2, seed=0), tmp_path / "r.fbv")
        write_batch_fbv(seeded_standard_normal(4, 2, seed=1), tmp_path / "f.fbv")
        code, _, err = run_cli(
            capsys,
            "prdc",
            "--real",
            str(tmp_path / "r.fbv"),
            "--fake",
            str(tmp_path / "f.fbv"),
            "--k",
            "4",
        )
        assert code == 1
        assert "k" in json.loads(err)["message"]


class TestTrainToy:
    def test_emits_report_bundle(self, capsys, tmp_path):
        out = tmp_path / "run"
        payload = stdout_json(
            capsys,
            "train-toy",
            "--condition",
            "proposed",
            "--seed",
            "0",
            "--steps",
            "10",
            "--out",
            str(out),
        )
        assert payload["steps"] == 10
        assert (out / "report.json").exists()
        assert len(list(out.glob("hist_dim*.csv"))) == 8
        assert (out / "corr.csv").exists()
        assert len(list(out.glob("*.svg"))) == 3

    def test_condition_alias_with_hyphen(self, capsys, tmp_path):
        payload = stdout_json(
            capsys, "train-toy", "--condition", "conventional-kl", "--steps", "5"
        )
        assert payload["condition"] == "conventional_kl"

    def test_two_runs_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            stdout_json(
                capsys,
                "train-toy",
                "--seed",
                "1",
                "--steps",
                "8",
                "--out",
                str(out),
            )
        assert tree_bytes(a) == tree_bytes(b)


class TestReportRerender:
    def test_experiment_rerender_matches_original(self, capsys, tmp_path):
        first = tmp_path / "first"
        stdout_json(
            capsys, "train-toy", "--seed", "0", "--steps", "6", "--out", str(first)
        )
        second = tmp_path / "second"
        payload = stdout_json(
            capsys, "report", "--input", str(first / "report.json"), "--out", str(second)
        )
        assert payload["artifacts"]
        assert tree_bytes(first) == tree_bytes(second)

    def test_prdc_scores_rerender(self, capsys, tmp_path):
        write_batch_fbv(seeded_standard_normal(20, 2, seed=0), tmp_path / "r.fbv")
        write_batch_fbv(seeded_standard_normal(20, 2, seed=1), tmp_path / "f.fbv")
        scores_path = tmp_path / "scores.json"
        stdout_json(
            capsys,
            "prdc",
            "--real",
            str(tmp_path / "r.fbv"),
            "--fake",
            str(tmp_path / "f.fbv"),
            "--out",
            str(scores_path),
        )
        out = tmp_path / "rendered"
        stdout_json(capsys, "report", "--input", str(scores_path), "--out", str(out))
        stored = json.loads((out / "scores.json").read_text())
        assert stored["k"] == 5
        assert (out / "scores.svg").exists()

    def test_rejects_unknown_payload(self, capsys, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text(json.dumps({"hello": 1}))
        code, _, err = run_cli(
            capsys, "report", "--input", str(path), "--out", str(tmp_path / "out")
        )
        assert code == 1
        assert "kind" in json.loads(err)["message"]


class TestGradcheck:
    def test_small_run_passes(self, capsys):
        payload = stdout_json(
            capsys, "gradcheck", "--batches", "2", "--n", "16", "--d", "4"
        )
        for name, err in payload["max_relative_error"].items():
            assert err < payload["tolerances"][name]


class TestUsageErrors:
    def test_seed_rejected_on_non_random_subcommands(self, capsys, batch_csv):
        with pytest.raises(SystemExit) as exc:
            main(["losses", "eval", "--input", str(batch_csv), "--seed", "3"])
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert json.loads(err)["error"] == "usage"

        with pytest.raises(SystemExit) as exc:
            main(["prdc", "--real", "a", "--fake", "b", "--seed", "3"])
        assert exc.value.code == 2

    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
