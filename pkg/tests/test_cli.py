"""End-to-end CLI flows on tiny datasets: gen, run, train, eval, report."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from robopack.cli import main
from robopack.datagen import load_stream, validate_stream


def gen_args(out: Path, episodes: int = 3, seed: int = 5, opt: int = 2):
    return [
        "gen",
        "--opt", str(opt),
        "--bins", "6x6x6",
        "--count-min", "6",
        "--count-max", "12",
        "--episodes", str(episodes),
        "--seed", str(seed),
        "--out", str(out),
    ]


class TestGen:
    def test_writes_valid_episodes(self, tmp_path):
        out = tmp_path / "data"
        assert main(gen_args(out)) == 0
        files = sorted(out.glob("episode_*.json"))
        assert [f.name for f in files] == [
            "episode_0000.json",
            "episode_0001.json",
            "episode_0002.json",
        ]
        for f in files:
            bs = load_stream(f)
            assert validate_stream(bs).ok
            assert bs.spec.opt_bins == 2

    def test_distinct_seeds_per_episode(self, tmp_path):
        out = tmp_path / "data"
        main(gen_args(out))
        seeds = {load_stream(f).spec.seed for f in out.glob("episode_*.json")}
        assert len(seeds) == 3

    def test_byte_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(gen_args(a)) == 0
        assert main(gen_args(b)) == 0
        for f1, f2 in zip(sorted(a.iterdir()), sorted(b.iterdir())):
            assert f1.read_bytes() == f2.read_bytes()

    def test_small_variant(self, tmp_path):
        out = tmp_path / "small"
        assert main(gen_args(out, episodes=1) + ["--small"]) == 0
        bs = load_stream(out / "episode_0000.json")
        assert validate_stream(bs).ok
        assert len(bs.boxes) >= 12  # doubled count target

    def test_invalid_range_rejected(self, tmp_path):
        args = gen_args(tmp_path / "x")
        args[args.index("--count-min") + 1] = "20"
        args[args.index("--count-max") + 1] = "10"
        assert main(args) == 2


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-data")
    assert main(gen_args(out, episodes=3, seed=9)) == 0
    return out


class TestRun:
    def test_heuristics_report(self, tmp_path, dataset):
        report_path = tmp_path / "report.json"
        code = main(
            [
                "run",
                "--algo", "firstfit,floor,column,walle,oracle",
                "--data", str(dataset),
                "--max-bins", "6",
                "--out", str(report_path),
            ]
        )
        assert code == 0
        doc = json.loads(report_path.read_text())
        assert doc["format_version"] == 1
        assert set(doc["per_algorithm"]) == {"firstfit", "floor", "column", "walle", "oracle"}
        assert doc["per_algorithm"]["oracle"]["c"] == 1.0
        assert doc["per_algorithm"]["oracle"]["mean_fill"] == 1.0
        assert len(doc["per_instance"]) == 15
        assert doc["config_echo"]["max_bins"] == 6

    def test_walle_param_override(self, tmp_path, dataset):
        report_path = tmp_path / "report.json"
        code = main(
            [
                "run",
                "--algo", "walle",
                "--data", str(dataset),
                "--max-bins", "6",
                "--walle-params", "0.75,1,1,0.01,1",
                "--out", str(report_path),
            ]
        )
        assert code == 0

    def test_bad_walle_params_rejected(self, tmp_path, dataset):
        with pytest.raises(SystemExit):
            main(
                [
                    "run",
                    "--algo", "walle",
                    "--data", str(dataset),
                    "--walle-params", "1,2",
                    "--out", str(tmp_path / "r.json"),
                ]
            )

    def test_packman_needs_model(self, tmp_path, dataset):
        code = main(
            [
                "run",
                "--algo", "packman",
                "--data", str(dataset),
                "--out", str(tmp_path / "r.json"),
            ]
        )
        assert code == 2

    def test_unknown_algorithm(self, tmp_path, dataset):
        code = main(
            ["run", "--algo", "bogus", "--data", str(dataset), "--out", str(tmp_path / "r.json")]
        )
        assert code == 2

    def test_missing_data_dir(self, tmp_path):
        code = main(
            ["run", "--algo", "walle", "--data", str(tmp_path / "void"), "--out", str(tmp_path / "r.json")]
        )
        assert code == 2


class TestTrainEval:
    def train_args(self, dataset, model, curve=None, seed=3):
        args = [
            "train",
            "--data", str(dataset),
            "--episodes", "4",
            "--explore-episodes", "2",
            "--batch-size", "8",
            "--max-bins", "6",
            "--seed", str(seed),
            "--out", str(model),
        ]
        if curve:
            args += ["--curve", str(curve)]
        return args

    def test_train_then_eval(self, tmp_path, dataset):
        model = tmp_path / "model.json"
        curve = tmp_path / "curve.csv"
        assert main(self.train_args(dataset, model, curve)) == 0
        assert model.exists()
        lines = curve.read_text().strip().split("\n")
        assert len(lines) == 5  # header + 4 episodes
        report_path = tmp_path / "eval.json"
        code = main(
            [
                "eval",
                "--model", str(model),
                "--data", str(dataset),
                "--max-bins", "6",
                "--out", str(report_path),
            ]
        )
        assert code == 0
        doc = json.loads(report_path.read_text())
        assert set(doc["per_algorithm"]) == {"packman"}
        assert doc["config_echo"]["command"] == "eval"

    def test_train_deterministic(self, tmp_path, dataset):
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        assert main(self.train_args(dataset, m1)) == 0
        assert main(self.train_args(dataset, m2)) == 0
        assert m1.read_bytes() == m2.read_bytes()

    def test_eval_corrupt_model(self, tmp_path, dataset):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(
            ["eval", "--model", str(bad), "--data", str(dataset), "--out", str(tmp_path / "r.json")]
        )
        assert code == 2

    def test_run_packman_with_model(self, tmp_path, dataset):
        model = tmp_path / "model.json"
        assert main(self.train_args(dataset, model)) == 0
        report_path = tmp_path / "mix.json"
        code = main(
            [
                "run",
                "--algo", "walle,packman",
                "--data", str(dataset),
                "--model", str(model),
                "--max-bins", "6",
                "--out", str(report_path),
            ]
        )
        assert code == 0
        doc = json.loads(report_path.read_text())
        assert set(doc["per_algorithm"]) == {"walle", "packman"}


class TestReport:
    def test_csv_conversion(self, tmp_path, dataset):
        report_path = tmp_path / "report.json"
        main(
            [
                "run",
                "--algo", "firstfit,walle",
                "--data", str(dataset),
                "--max-bins", "6",
                "--out", str(report_path),
            ]
        )
        summary = tmp_path / "summary.csv"
        rows = tmp_path / "rows.csv"
        code = main(
            ["report", "--in", str(report_path), "--csv", str(summary), "--per-instance", str(rows)]
        )
        assert code == 0
        assert summary.read_text().startswith("algorithm,c,mean_fill,best_share,mean_time_s\n")
        lines = rows.read_text().strip().split("\n")
        assert lines[0] == "algorithm,instance,seed,bins_used,fill_first_opt,time_per_box_s"
        assert len(lines) == 7

    def test_missing_report(self, tmp_path):
        assert main(["report", "--in", str(tmp_path / "no.json"), "--csv", str(tmp_path / "s.csv")]) == 2
