import json

import pytest
from click.testing import CliRunner

from semstrength.cli import main

FIG_PAIR = "p cnf 3 2\n3 -1 0\n3 -2 0\n"
FIG_P = "[0.3, 0.5, 0.2]"


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestProb:
    def test_fig_pair_values(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        p = _write(tmp_path, "p.json", FIG_P)
        result = runner.invoke(main, ["prob", "--cnf", cnf, "--p", p])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["groups"] == pytest.approx([0.76, 0.60])
        assert obj["product"] == pytest.approx(0.456)

    def test_bad_p_length(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        p = _write(tmp_path, "p.json", "[0.5]")
        result = runner.invoke(main, ["prob", "--cnf", cnf, "--p", p])
        assert result.exit_code == 1
        err = json.loads(result.stderr.strip())
        assert err["error"] == "ValueError"


class TestCompile:
    def test_stats_schema(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        result = runner.invoke(main, ["compile", "--cnf", cnf, "--order", "natural"])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["num_vars"] == 3
        assert obj["num_clauses"] == 2
        assert obj["order"]["sequence"] == [1, 2, 3]
        assert len(obj["groups"]) == 2
        assert all({"id", "clauses", "num_vars", "nodes"} <= set(g) for g in obj["groups"])

    def test_group_file(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        groups = _write(tmp_path, "g.txt", "1 2\n")
        result = runner.invoke(main, ["compile", "--cnf", cnf, "--groups", groups])
        assert json.loads(result.output)["groups"][0]["clauses"] == [1, 2]

    def test_missing_file_errors(self, runner):
        result = runner.invoke(main, ["compile", "--cnf", "/nonexistent.cnf"])
        assert result.exit_code != 0


class TestMi:
    def test_top_one_matches_rank_pairs(self, runner, tmp_path):
        cnf_text = "p cnf 4 3\n3 -1 0\n3 -2 0\n4 0\n"
        cnf = _write(tmp_path, "f.cnf", cnf_text)
        groups = _write(tmp_path, "g.txt", "1\n2\n3\n")
        batch = _write(tmp_path, "b.jsonl", "[0.3, 0.5, 0.2, 0.9]\n")
        result = runner.invoke(
            main,
            ["mi", "--cnf", cnf, "--groups", groups, "--p-batch", batch, "--top", "1"],
        )
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert len(obj["pairs"]) == 1
        assert obj["pairs"][0]["i"] == 0 and obj["pairs"][0]["j"] == 1
        assert obj["pairs"][0]["mi"] == pytest.approx(0.0064928, abs=1e-6)
        assert obj["pairs"][0]["batch_size"] == 1
        assert {s["reason"] for s in obj["skipped"]} == {"disjoint"}


class TestStrengthen:
    def test_writes_group_file_and_log(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        groups = _write(tmp_path, "g.txt", "1\n2\n")
        batch = _write(tmp_path, "b.jsonl", "[0.3, 0.5, 0.2]\n[0.6, 0.4, 0.1]\n")
        out_groups = str(tmp_path / "g2.txt")
        log = str(tmp_path / "log.jsonl")
        result = runner.invoke(
            main,
            [
                "strengthen", "--cnf", cnf, "--groups", groups, "--p-batch", batch,
                "--kappa", "1", "--node-cap", "1000",
                "--out-groups", out_groups, "--log", log,
            ],
        )
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["num_groups"] == 1
        assert (tmp_path / "g2.txt").read_text() == "1 2\n"
        record = json.loads((tmp_path / "log.jsonl").read_text())
        assert record["components"] == [[0, 1]]
        assert record["merged"][0]["nodes_after"] >= 1


class TestOracle:
    def test_model_count_and_probability(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        p = _write(tmp_path, "p.json", FIG_P)
        result = runner.invoke(main, ["oracle", "--cnf", cnf, "--p", p])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["model_count"] == 5
        assert obj["probability"] == pytest.approx(0.48)

    def test_agrees_with_prob_after_full_merge(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", FIG_PAIR)
        groups = _write(tmp_path, "g.txt", "1 2\n")
        p = _write(tmp_path, "p.json", FIG_P)
        prob_out = runner.invoke(main, ["prob", "--cnf", cnf, "--p", p, "--groups", groups])
        oracle_out = runner.invoke(main, ["oracle", "--cnf", cnf, "--p", p])
        assert json.loads(prob_out.output)["product"] == pytest.approx(
            json.loads(oracle_out.output)["probability"]
        )

    def test_variable_cap(self, runner, tmp_path):
        cnf = _write(tmp_path, "f.cnf", "p cnf 30 1\n1 2 0\n")
        result = runner.invoke(main, ["oracle", "--cnf", cnf])
        assert result.exit_code == 1
        assert "capped" in json.loads(result.stderr.strip())["message"]


class TestTrain:
    def test_tiny_run_writes_outputs(self, runner, tmp_path):
        config = _write(
            tmp_path,
            "cfg.json",
            json.dumps(
                {
                    "epochs": 2,
                    "batch_size": 4,
                    "learning_rate": 0.3,
                    "lambda": 0.5,
                    "seed": 1,
                    "n_train": 8,
                    "n_test": 4,
                    "holes": 4,
                    "strengthen": {"eta": 1, "kappa": 2, "node_cap": 5000,
                                   "max_rounds": 1, "mi_batch": 4},
                }
            ),
        )
        out_dir = tmp_path / "run"
        result = runner.invoke(
            main,
            ["train", "--task", "sudoku4", "--config", config,
             "--variant", "strengthened", "--out-dir", str(out_dir)],
        )
        assert result.exit_code == 0, result.output
        obj = json.loads(result.output)
        assert {"train", "test", "config", "out_dir", "figures"} <= set(obj)
        for name in (
            "history.jsonl", "history.csv", "metrics.json", "model.json",
            "strengthening.jsonl", "loss_curves.png", "accuracy_curves.png",
        ):
            assert (out_dir / name).exists(), name
        history = [json.loads(l) for l in (out_dir / "history.jsonl").read_text().splitlines()]
        assert [h["epoch"] for h in history] == [1, 2]
        assert {"ce", "sl", "exact", "consistent", "merges"} <= set(history[0])

    def test_seed_required(self, runner, tmp_path):
        config = _write(tmp_path, "cfg.json", json.dumps({"epochs": 1}))
        result = runner.invoke(main, ["train", "--task", "matching", "--config", config])
        assert result.exit_code == 1
        assert "seed" in json.loads(result.stderr.strip())["message"]

    def test_env_var_out_dir(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("SEMSTRENGTH_OUT_DIR", str(tmp_path / "envroot"))
        config = _write(
            tmp_path, "cfg.json",
            json.dumps({"epochs": 1, "batch_size": 4, "learning_rate": 0.2,
                        "seed": 2, "n_train": 6, "n_test": 2, "rows": 2, "cols": 2}),
        )
        result = runner.invoke(
            main, ["train", "--task", "matching", "--config", config, "--variant", "tnorm"]
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "envroot" / "matching-tnorm-2" / "metrics.json").exists()


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
