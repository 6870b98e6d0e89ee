"""CLI behaviour: manifests, file outputs, determinism, exit codes."""

import json
import xml.etree.ElementTree as ET

import pytest

from qbidsim import cli, market


def tiny_config(tmp_path, **run_extra):
    config = {
        "trainer": {
            "max_episodes": 4,
            "batch_size": 8,
            "replay_capacity": 100,
            "hidden_size": 4,
        },
        "vqc": {"depth": 1},
        "run": {"seeds": [0], "backends": ["mlp"], **run_extra},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestRun:
    def test_writes_report_and_history_per_job(self, tmp_path):
        config = tiny_config(tmp_path)
        out = tmp_path / "out"
        code = run_cli("run", "--config", config, "--backend", "both",
                       "--seeds", "0,1", "--out", out)
        assert code == 0
        files = sorted(p.name for p in out.iterdir())
        assert files == [
            "hybrid_seed0_history.csv",
            "hybrid_seed0_report.json",
            "hybrid_seed1_history.csv",
            "hybrid_seed1_report.json",
            "mlp_seed0_history.csv",
            "mlp_seed0_report.json",
            "mlp_seed1_history.csv",
            "mlp_seed1_report.json",
        ]
        report = json.loads((out / "mlp_seed0_report.json").read_text())
        assert report["backend"] == "mlp"
        history = (out / "mlp_seed0_history.csv").read_text().splitlines()
        assert history[0] == "episode,reward_g0,reward_g1,reward_g2,reward_g3,reward_g4,reward_g5,total,epsilon"
        assert len(history) == 1 + 4

    def test_rerun_is_byte_identical(self, tmp_path):
        config = tiny_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli("run", "--config", config, "--out", out_a) == 0
        assert run_cli("run", "--config", config, "--out", out_b) == 0
        for path_a in sorted(out_a.iterdir()):
            path_b = out_b / path_a.name
            assert path_a.read_bytes() == path_b.read_bytes(), path_a.name

    def test_missing_dataset_path_exits_2(self, tmp_path, capsys):
        config = tiny_config(tmp_path)
        code = run_cli("run", "--config", config, "--dataset", tmp_path / "nope.json")
        assert code == 2
        err = capsys.readouterr().err
        assert "dataset" in err and "nope.json" in err

    def test_unknown_config_section_exits_2(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"trainer": {}, "surprise": {}}))
        assert run_cli("run", "--config", path) == 2
        assert "surprise" in capsys.readouterr().err

    def test_unknown_trainer_key_exits_2(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"trainer": {"learning_rte": 0.1}}))
        assert run_cli("run", "--config", path) == 2
        err = capsys.readouterr().err
        assert "learning_rte" in err and "trainer" in err

    def test_invalid_trainer_value_exits_2(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"trainer": {"gamma": 2.0}, "run": {"seeds": [0]}}))
        assert run_cli("run", "--config", path) == 2
        assert "gamma" in capsys.readouterr().err

    def test_market_overrides_apply(self, tmp_path):
        config = {
            "market": {"n_actions": 5},
            "trainer": {"max_episodes": 2, "batch_size": 8, "replay_capacity": 50,
                        "hidden_size": 3},
            "run": {"seeds": [0], "backends": ["mlp"]},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        out = tmp_path / "out"
        assert run_cli("run", "--config", path, "--out", out) == 0
        report = json.loads((out / "mlp_seed0_report.json").read_text())
        assert report["dataset"]["n_actions"] == 5

    def test_explicit_dataset_file(self, tmp_path):
        dataset = market.default_dataset().to_dict()
        dataset["name"] = "custom"
        ds_path = tmp_path / "ds.json"
        ds_path.write_text(json.dumps(dataset))
        config = tiny_config(tmp_path)
        out = tmp_path / "out"
        assert run_cli("run", "--config", config, "--dataset", ds_path, "--out", out) == 0
        report = json.loads((out / "mlp_seed0_report.json").read_text())
        assert report["dataset"]["name"] == "custom"


class TestCompareAndPlot:
    @pytest.fixture()
    def run_dir(self, tmp_path):
        config = tiny_config(tmp_path)
        out = tmp_path / "out"
        assert run_cli("run", "--config", config, "--backend", "both", "--out", out) == 0
        return out

    def test_compare_writes_table_files(self, run_dir, tmp_path):
        out = tmp_path / "cmp"
        code = run_cli("compare", run_dir / "mlp_seed0_report.json",
                       run_dir / "hybrid_seed0_report.json", "--out", out)
        assert code == 0
        csv_text = (out / "comparison.csv").read_text()
        assert csv_text.startswith("backend,runs,")
        assert (out / "comparison.md").read_text().startswith("| backend |")

    def test_compare_mixed_datasets_exits_2(self, run_dir, tmp_path, capsys):
        report = json.loads((run_dir / "mlp_seed0_report.json").read_text())
        report["dataset"]["price_cap"] = 500.0
        other = tmp_path / "other_report.json"
        other.write_text(json.dumps(report))
        code = run_cli("compare", run_dir / "mlp_seed0_report.json", other,
                       "--out", tmp_path / "cmp2")
        assert code == 2
        assert "mix" in capsys.readouterr().err

    def test_plot_writes_valid_svgs(self, run_dir, tmp_path):
        out = tmp_path / "plots"
        code = run_cli("plot", run_dir / "mlp_seed0_report.json",
                       "--agent", "3", "--hour", "18", "--out", out)
        assert code == 0
        for name in ("agent3_hour18_state_action.svg", "agent3_hour18_state_reward.svg"):
            root = ET.fromstring((out / name).read_text())
            assert root.tag.endswith("svg")

    def test_plot_bad_hour_exits_2(self, run_dir, tmp_path, capsys):
        code = run_cli("plot", run_dir / "mlp_seed0_report.json",
                       "--agent", "0", "--hour", "25", "--out", tmp_path)
        assert code == 2
        assert "hour" in capsys.readouterr().err


class TestBenchCommand:
    def test_bench_prints_timings(self, capsys):
        assert run_cli("bench", "--backend", "mlp", "--calls", "5") == 0
        body = json.loads(capsys.readouterr().out)
        assert body["backend"] == "mlp"
        assert body["calls"] == 5


class TestParallelRuns:
    def test_parallel_env_var_produces_same_files(self, tmp_path, monkeypatch):
        config = tiny_config(tmp_path)
        out_seq, out_par = tmp_path / "seq", tmp_path / "par"
        assert run_cli("run", "--config", config, "--seeds", "0,1", "--out", out_seq) == 0
        monkeypatch.setenv("QBIDSIM_MAX_PARALLEL", "2")
        assert run_cli("run", "--config", config, "--seeds", "0,1", "--out", out_par) == 0
        for path in sorted(out_seq.iterdir()):
            assert (out_par / path.name).read_bytes() == path.read_bytes()
