"""CLI 测试"""

import json
from pathlib import Path
from typing import Union

import pandas as pd
import pytest
from typer.testing import CliRunner

from src.cli import app, cli_dispatch
from src.cli_support import EXIT_DATA, EXIT_OK, EXIT_USAGE

TINY_CONFIG = {
    "model": {"latent_dim": 2, "hidden_sizes": [4]},
    "train": {
        "background_size": 8,
        "batch_size": 8,
        "n_embeddings": 3,
        "grid_size": 4,
        "epochs": 1,
        "warmup_epochs": 1,
        "tasks_per_epoch": 1,
    },
    "classifier": {"hidden_units": 3, "epochs": 5},
    "eval": {"reps": 2, "beran_taus": [0.5, 5.0]},
}


def _run(*args: Union[str, Path]) -> int:
    return cli_dispatch([str(arg) for arg in args])


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    """写好配置与合成数据的工作目录"""
    (tmp_path / "config.json").write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    out = tmp_path / "data.csv"
    code = _run("-s", "3", "-q", "synth", "--kind", "linear", "--n", "8", "--out", out)
    assert code == EXIT_OK
    return tmp_path


@pytest.fixture
def trained(workspace: Path) -> Path:
    code = _run(
        "-q",
        "-c",
        workspace / "config.json",
        "train",
        "--data",
        workspace / "data.csv",
        "--model-out",
        workspace / "model.json",
        "--log",
        workspace / "train.jsonl",
    )
    assert code == EXIT_OK
    return workspace


def _model_args(root: Path) -> list[Union[str, Path]]:
    return ["--model", root / "model.json", "--data", root / "data.csv"]


class TestBasics:
    """全局选项"""

    def test_help(self) -> None:
        """测试帮助"""
        result = CliRunner().invoke(app, ["--help"])
        assert result.exit_code == 0
        assert "train" in result.stdout
        assert "km-compare" in result.stdout

    def test_version(self, capsys: pytest.CaptureFixture[str]) -> None:
        """测试版本命令"""
        assert _run("--version") == EXIT_OK
        assert "0.1.0" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path: Path) -> None:
        code = _run("-c", tmp_path / "absent.json", "synth", "--out", tmp_path / "d.csv")
        assert code == EXIT_DATA

    def test_unknown_option(self) -> None:
        assert _run("synth", "--no-such-option") == EXIT_USAGE


class TestSynth:
    """synth 命令"""

    def test_writes_csv(self, workspace: Path) -> None:
        frame = pd.read_csv(workspace / "data.csv")
        assert list(frame.columns) == ["x1", "x2", "time", "event"]
        assert len(frame) == 16

    def test_same_seed_same_file(self, tmp_path: Path) -> None:
        for name in ("a.csv", "b.csv"):
            args = ["synth", "--kind", "circles", "--n", "4", "--out", tmp_path / name]
            _run("-q", "-s", "5", *args)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_unknown_kind(self, tmp_path: Path) -> None:
        assert _run("synth", "--kind", "spiral", "--out", tmp_path / "d.csv") == EXIT_USAGE

    def test_global_options_after_subcommand(self, tmp_path: Path) -> None:
        """--seed 写在子命令之后与写在之前结果一致"""
        after = tmp_path / "after.csv"
        before = tmp_path / "before.csv"
        code = _run("synth", "--kind", "linear", "--n", "100", "--seed", "7", "--out", after)
        assert code == EXIT_OK
        assert _run("-q", "--seed", "7", "synth", "--n", "100", "--out", before) == EXIT_OK
        assert after.read_bytes() == before.read_bytes()
        assert len(pd.read_csv(after)) == 200

    def test_subcommand_seed_overrides_global(self, tmp_path: Path) -> None:
        _run("-q", "-s", "1", "synth", "--n", "5", "-s", "2", "--out", tmp_path / "a.csv")
        _run("-q", "synth", "--n", "5", "--seed", "2", "--out", tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_missing_config_after_subcommand(self, tmp_path: Path) -> None:
        args = ["--config", tmp_path / "absent.json", "--out", tmp_path / "d.csv"]
        assert _run("synth", *args) == EXIT_DATA


class TestPipeline:
    """train / predict / generate / trajectory / km-compare / eval"""

    def test_train_writes_model_and_log(self, trained: Path) -> None:
        document = json.loads((trained / "model.json").read_text(encoding="utf-8"))
        assert document["format_version"] == 1
        lines = (trained / "train.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1

    def test_predict(self, trained: Path) -> None:
        out = trained / "pred"
        assert _run("-q", "predict", *_model_args(trained), "--out", out) == EXIT_OK
        predictions = pd.read_csv(out / "predictions.csv")
        assert list(predictions.columns) == ["row_id", "expected_time", "sampled_time"]
        assert len(predictions) == 16
        curves = pd.read_csv(out / "survival_curves.csv")
        assert set(curves["row_id"]) == set(range(16))

    def test_generate_is_reproducible(self, trained: Path) -> None:
        for name in ("g1.csv", "g2.csv"):
            args = [*_model_args(trained), "--count", "5", "--out", trained / name]
            code = _run("-q", "-s", "9", "generate", *args)
            assert code == EXIT_OK
        assert (trained / "g1.csv").read_bytes() == (trained / "g2.csv").read_bytes()
        frame = pd.read_csv(trained / "g1.csv")
        assert len(frame) == 5
        assert set(frame["event"]) <= {0, 1}

    def test_trajectory(self, trained: Path) -> None:
        out = trained / "traj"
        code = _run("-q", "trajectory", *_model_args(trained), "--rows", "0,3", "--out", out)
        assert code == EXIT_OK
        frame = pd.read_csv(out / "trajectory_3.csv")
        assert list(frame.columns) == ["time", "x1", "x2"]
        assert len(frame) == 4
        weights = json.loads((out / "trajectory_0_weights.json").read_text(encoding="utf-8"))
        assert len(weights["weights"]) == 4
        assert sum(weights["weights"][0]) == pytest.approx(1.0)

    def test_trajectory_row_out_of_range(self, trained: Path) -> None:
        code = _run("-q", "trajectory", *_model_args(trained), "--rows", "99", "--out", trained)
        assert code == EXIT_DATA

    def test_km_compare(self, trained: Path) -> None:
        generated = _run("-q", "generate", *_model_args(trained), "--out", trained / "gen.csv")
        assert generated == EXIT_OK
        code = _run(
            "-q",
            "km-compare",
            "--original",
            trained / "data.csv",
            "--generated",
            trained / "gen.csv",
            "--out",
            trained / "km.json",
        )
        assert code == EXIT_OK
        report = json.loads((trained / "km.json").read_text(encoding="utf-8"))
        assert 0.0 <= report["max_deviation"] <= 1.0
        assert report["n_generated"] == 16

    def test_eval(self, workspace: Path) -> None:
        code = _run(
            "-q",
            "-c",
            workspace / "config.json",
            "eval",
            "--data",
            workspace / "data.csv",
            "--baseline",
            "--out",
            workspace / "cv.json",
        )
        assert code == EXIT_OK
        report = json.loads((workspace / "cv.json").read_text(encoding="utf-8"))
        assert len(report["c_index"]) == 2
        assert report["baseline_taus"] is not None


class TestDataErrors:
    """数据错误的退出码"""

    def test_unparsable_cell(self, tmp_path: Path) -> None:
        data = tmp_path / "bad.csv"
        data.write_text("x1,time,event\n1.0,2,1\n2.0,oops,0\n", encoding="utf-8")
        assert _run("-q", "train", "--data", data, "--model-out", tmp_path / "m.json") == EXIT_DATA

    def test_missing_model(self, tmp_path: Path) -> None:
        data = tmp_path / "d.csv"
        data.write_text("x1,time,event\n1.0,2,1\n", encoding="utf-8")
        code = _run(
            "-q", "predict", "--model", tmp_path / "absent.json", "--data", data, "--out", tmp_path
        )
        assert code == EXIT_DATA
