"""survgen CLI 入口"""

from __future__ import annotations

import contextlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, ContextManager, Optional, Sequence, cast

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from src import __version__
from src.cli_support import (
    EXIT_OK,
    EXIT_USAGE,
    ClickAbort,
    ClickException,
    ClickExit,
    ErrorHelper,
    exit_code_for,
)
from src.config.manager import ConfigManager, SurvGenConfig
from src.datasets.io import (
    DataSchema,
    builtin_schema,
    decode_features,
    infer_schema,
    load_csv,
    load_schema,
    read_frame,
    save_csv,
)
from src.datasets.synthetic import SYNTHETIC_KINDS
from src.errors import DataError, SurvGenError
from src.evaluation.crossval import cross_validate
from src.evaluation.fidelity import compare_km
from src.generation.generator import generate_dataset
from src.model.inference import predict as predict_rows
from src.model.inference import trajectory_for
from src.model.store import ModelStore
from src.survival.sampling import spawn_generators
from src.training.trainer import fit

app = typer.Typer(
    name="survgen",
    help="survgen - 生存数据生成与原型轨迹解释",
    add_completion=False,
    no_args_is_help=True,
)

console = Console(stderr=True)
logger = logging.getLogger(__name__)


@dataclass
class CliState:
    """全局选项解析结果"""

    config: SurvGenConfig
    quiet: bool
    config_path: Optional[Path] = None
    seed_override: Optional[int] = None

    @property
    def seed(self) -> int:
        return self.config.train.seed


def _seed_option() -> Any:
    return typer.Option(None, "--seed", "-s", help="随机种子（覆盖配置）")


def _config_option() -> Any:
    return typer.Option(None, "--config", "-c", help="JSON 配置文件")


def _quiet_option() -> Any:
    return typer.Option(False, "--quiet", "-q", help="只输出警告与错误")


def version_callback(value: bool) -> None:
    """版本回调"""
    if value:
        console.print(f"survgen version {__version__}")
        raise typer.Exit()


def _setup_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _load_config(path: Optional[Path], seed: Optional[int]) -> SurvGenConfig:
    if path is not None and not path.exists():
        raise DataError(f"config file not found: {path}")
    loaded = ConfigManager(path).load()
    if seed is not None:
        loaded.train.seed = seed
    return loaded


def _state(
    ctx: typer.Context,
    seed: Optional[int] = None,
    config: Optional[Path] = None,
    quiet: bool = False,
) -> CliState:
    """合并子命令前后的全局选项，子命令之后给出的值优先"""
    base = cast(CliState, ctx.obj)
    if seed is None and config is None and not quiet:
        return base
    if quiet and not base.quiet:
        _setup_logging(True)
    config_path = config if config is not None else base.config_path
    seed_override = seed if seed is not None else base.seed_override
    state = CliState(
        config=_load_config(config_path, seed_override),
        quiet=base.quiet or quiet,
        config_path=config_path,
        seed_override=seed_override,
    )
    ctx.obj = state
    return state


def _status(state: CliState, message: str) -> ContextManager[object]:
    if state.quiet:
        return contextlib.nullcontext()
    return console.status(f"[bold green]{message}")


def _resolve_schema(value: Optional[str]) -> Optional[DataSchema]:
    """--schema 可以是文件路径或内置 schema 名称"""
    if value is None:
        return None
    path = Path(value)
    if path.exists():
        return load_schema(path)
    return builtin_schema(value)


def _write_json(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload + "\n", encoding="utf-8")


@app.callback()
def global_options(
    ctx: typer.Context,
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="显示版本号",
    ),
) -> None:
    """survgen - 生存数据生成与原型轨迹解释

    --seed / --config / --quiet 也可以写在子命令之后。
    """
    _setup_logging(quiet)
    ctx.obj = CliState(_load_config(config, seed), quiet, config, seed)


@app.command()
def synth(
    ctx: typer.Context,
    kind: str = typer.Option("linear", "--kind", "-k", help="linear | parabolas | circles"),
    n: int = typer.Option(200, "--n", "-n", help="每个簇/曲线的点数"),
    out: Path = typer.Option(..., "--out", "-o", help="输出 CSV"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """生成合成数据集

    示例:
        survgen synth --kind linear --n 100 --seed 7 --out d.csv
    """
    state = _state(ctx, seed, config, quiet)
    if kind not in SYNTHETIC_KINDS:
        choices = ", ".join(SYNTHETIC_KINDS)
        raise typer.BadParameter(
            f"unknown kind '{kind}', choose from {choices}", param_hint="--kind"
        )
    ds = SYNTHETIC_KINDS[kind](n=n, rng=np.random.default_rng(state.seed))
    save_csv(ds, out)
    logger.info("wrote %d rows to %s", len(ds), out)


@app.command()
def train(
    ctx: typer.Context,
    data: Path = typer.Option(..., "--data", "-d", help="训练 CSV"),
    schema: Optional[str] = typer.Option(None, "--schema", help="schema 文件或内置名称"),
    model_out: Path = typer.Option(..., "--model-out", "-m", help="模型输出 JSON"),
    log: Optional[Path] = typer.Option(None, "--log", help="JSON-lines 训练日志"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """训练模型

    示例:
        survgen train --data veteran.csv --schema veteran --model-out model.json
    """
    state = _state(ctx, seed, config, quiet)
    resolved = _resolve_schema(schema) or infer_schema(read_frame(data))
    ds = load_csv(data, resolved)
    with _status(state, f"训练中（{len(ds)} 行）..."):
        model = fit(ds, state.config, state.seed, schema=resolved, log_path=log)
    ModelStore(model_out).save(model)
    logger.info("model saved to %s", model_out)


@app.command()
def predict(
    ctx: typer.Context,
    model: Path = typer.Option(..., "--model", "-m", help="模型 JSON"),
    data: Path = typer.Option(..., "--data", "-d", help="输入 CSV"),
    out: Path = typer.Option(..., "--out", "-o", help="输出目录"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """预测期望时间、采样时间与生存曲线

    输出 predictions.csv 与长格式的 survival_curves.csv。
    """
    state = _state(ctx, seed, config, quiet)
    trained = ModelStore(model).load()
    ds = load_csv(data, trained.schema)
    result = predict_rows(trained, ds.features, np.random.default_rng(state.seed))

    out.mkdir(parents=True, exist_ok=True)
    rows = np.arange(len(ds))
    pd.DataFrame(
        {
            "row_id": rows,
            "expected_time": result.expected_time,
            "sampled_time": result.sampled_time,
        }
    ).to_csv(out / "predictions.csv", index=False, lineterminator="\n")
    u = result.times.size
    pd.DataFrame(
        {
            "row_id": np.repeat(rows, u),
            "time": np.tile(result.times, len(ds)),
            "survival": result.survival.reshape(-1),
        }
    ).to_csv(out / "survival_curves.csv", index=False, lineterminator="\n")
    logger.info("predicted %d rows into %s", len(ds), out)


@app.command()
def generate(
    ctx: typer.Context,
    model: Path = typer.Option(..., "--model", "-m", help="模型 JSON"),
    data: Path = typer.Option(..., "--data", "-d", help="条件输入 CSV"),
    count: Optional[int] = typer.Option(
        None, "--count", "-n", min=1, help="有放回抽取的条件行数（默认每行一次）"
    ),
    out: Path = typer.Option(..., "--out", "-o", help="输出 CSV"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """生成新的生存数据 (x̂, T_gen, δ_gen)"""
    state = _state(ctx, seed, config, quiet)
    trained = ModelStore(model).load()
    ds = load_csv(data, trained.schema)
    pick_rng, gen_rng = spawn_generators(state.seed, 2)
    features = ds.features
    if count is not None:
        if len(ds) == 0:
            raise DataError(f"no conditioning rows in {data}")
        features = features[pick_rng.integers(0, len(ds), size=count)]
    with _status(state, f"生成 {features.shape[0]} 个实例..."):
        generated = generate_dataset(trained, features, gen_rng)
    save_csv(generated, out, trained.schema)
    logger.info("wrote %d generated rows to %s", len(generated), out)


@app.command()
def trajectory(
    ctx: typer.Context,
    model: Path = typer.Option(..., "--model", "-m", help="模型 JSON"),
    data: Path = typer.Option(..., "--data", "-d", help="输入 CSV"),
    rows: str = typer.Option("0", "--rows", "-r", help="逗号分隔的行号（从 0 开始）"),
    out: Path = typer.Option(..., "--out", "-o", help="输出目录"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """导出原型轨迹

    每行写出 trajectory_{row}.csv（时间 + 原始特征列）与 trajectory_{row}_weights.json。
    """
    state = _state(ctx, seed, config, quiet)
    trained = ModelStore(model).load()
    ds = load_csv(data, trained.schema)
    try:
        indices = [int(part) for part in rows.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"rows must be integers: {rows}", param_hint="--rows") from e
    for row in indices:
        if not 0 <= row < len(ds):
            raise DataError(f"row {row} out of range for {len(ds)} rows", row=row)

    out.mkdir(parents=True, exist_ok=True)
    for row, stream in zip(indices, spawn_generators(state.seed, len(indices))):
        traj = trajectory_for(trained, ds.features[row], stream)
        frame = decode_features(traj.feature_points, trained.schema)
        frame.insert(0, "time", traj.grid.points)
        frame.to_csv(out / f"trajectory_{row}.csv", index=False, lineterminator="\n")
        weights = {"time": traj.grid.points.tolist(), "weights": traj.weights.tolist()}
        _write_json(out / f"trajectory_{row}_weights.json", json.dumps(weights))
    logger.info("wrote %d trajectories to %s", len(indices), out)


@app.command("eval")
def evaluate(
    ctx: typer.Context,
    data: Path = typer.Option(..., "--data", "-d", help="数据 CSV"),
    schema: Optional[str] = typer.Option(None, "--schema", help="schema 文件或内置名称"),
    reps: Optional[int] = typer.Option(None, "--reps", min=1, help="重复次数（默认取配置）"),
    baseline: bool = typer.Option(False, "--baseline", help="同时评估 Beran 基线"),
    out: Path = typer.Option(..., "--out", "-o", help="报告 JSON"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """重复 75/25 划分的交叉验证 C-index"""
    state = _state(ctx, seed, config, quiet)
    resolved = _resolve_schema(schema) or infer_schema(read_frame(data))
    ds = load_csv(data, resolved)
    n_reps = reps or state.config.eval.reps
    with _status(state, f"交叉验证（{n_reps} 次）..."):
        report = cross_validate(
            ds, state.config, n_reps, state.seed, include_baseline=baseline, schema=resolved
        )
    _write_json(out, report.model_dump_json(indent=2))

    if not state.quiet:
        table = Table(title="Cross-validated C-index")
        table.add_column("Model", style="cyan")
        table.add_column("Mean", justify="right")
        table.add_column("Std", justify="right")
        table.add_row("survgen", _fmt(report.mean), _fmt(report.std))
        if report.baseline_c_index is not None:
            table.add_row("Beran", _fmt(report.baseline_mean), _fmt(report.baseline_std))
        console.print(table)


@app.command("km-compare")
def km_compare(
    ctx: typer.Context,
    original: Path = typer.Option(..., "--original", help="原始数据 CSV"),
    generated: Path = typer.Option(..., "--generated", help="生成数据 CSV"),
    schema: Optional[str] = typer.Option(None, "--schema", help="schema 文件或内置名称"),
    out: Path = typer.Option(..., "--out", "-o", help="报告 JSON"),
    seed: Optional[int] = _seed_option(),
    config: Optional[Path] = _config_option(),
    quiet: bool = _quiet_option(),
) -> None:
    """比较两组数据的 Kaplan-Meier 曲线"""
    state = _state(ctx, seed, config, quiet)
    resolved = _resolve_schema(schema) or infer_schema(read_frame(original))
    report = compare_km(load_csv(original, resolved), load_csv(generated, resolved))
    _write_json(out, report.model_dump_json(indent=2))

    if not state.quiet:
        table = Table(title="Kaplan-Meier comparison")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", justify="right")
        table.add_row("max deviation", f"{report.max_deviation:.4f}")
        table.add_row("censoring (original)", f"{report.censoring_rate_original:.3f}")
        table.add_row("censoring (generated)", f"{report.censoring_rate_generated:.3f}")
        console.print(table)


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def _report_error(error: BaseException) -> None:
    console.print(Panel(Text(str(error)), title="Error", border_style="red"))
    hint = ErrorHelper().suggest_fix(error)
    if hint:
        console.print(Text(hint, style="dim"))


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """运行 CLI 并返回退出码

    0 成功，1 用法错误，2 数据/配置错误，3 数值失败。
    """
    command = typer.main.get_command(app)
    args = list(argv) if argv is not None else sys.argv[1:]
    try:
        result = command.main(args=args, prog_name="survgen", standalone_mode=False)
    except (ClickExit, typer.Exit) as e:
        return int(e.exit_code)
    except ClickException as e:
        e.show()
        return EXIT_USAGE
    except (ClickAbort, typer.Abort):
        return EXIT_USAGE
    except (SurvGenError, ValueError, OSError) as e:
        _report_error(e)
        return exit_code_for(e)
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    """控制台脚本入口"""
    sys.exit(cli_dispatch())
