"""训练循环

一个 epoch 由 M 个任务组成。每个任务随机选取背景集与输入批次，前向计算
L_Beran、L_WAE、L_Tr1、L_Tr2，反向传播后做一次 Adam 更新。

预热阶段（epoch < warmup_epochs）背景与批次互不相交，背景嵌入来自当前编码器；
之后背景改为本 epoch 开始时全部训练实例 μ(x) 的快照，每个查询屏蔽自身。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, TextIO, Union

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import Node, backward, constant
from src.autodiff.optim import Adam
from src.config.manager import SurvGenConfig
from src.datasets.io import DataSchema, FeatureSpec
from src.datasets.scaling import FeatureScaler
from src.errors import ContractError, NumericalError
from src.generation.censor import train_censor_classifier
from src.model.store import TrainedModel
from src.model.trajectory import (
    TimeGrid,
    embedding_densities,
    smoothed_density_graph,
    time_grid,
    trajectory_from_densities,
)
from src.model.vae import VAE, sample_embeddings
from src.survival.estimators import km_density
from src.survival.graph import beran_graph
from src.survival.metrics import c_index_hard
from src.survival.sampling import gumbel_sample_times, spawn_generators
from src.survival.types import FloatArray, IntArray, SurvivalDataset
from src.training.losses import (
    LossParts,
    soft_c_index,
    total_loss,
    trajectory_likelihood_loss,
    trajectory_rank_loss,
    wae_loss,
)
from src.types import EpochRecord

logger = logging.getLogger(__name__)

EpochCallback = Callable[[EpochRecord], None]


@dataclass
class TrainingData:
    """训练用数组：标准化特征、内部单位时间，以及每行 T_i 处的 KM 密度"""

    features: FloatArray
    times: FloatArray
    events: IntArray
    km_at_time: FloatArray
    grid: TimeGrid

    @property
    def n(self) -> int:
        return int(self.times.size)

    @classmethod
    def prepare(cls, ds: SurvivalDataset, time_scale: float, grid_size: int) -> TrainingData:
        """ds 的特征须已标准化，时间为数据集单位"""
        times = ds.times / time_scale
        t_min, t_max = float(times.min()), float(times.max())
        if t_max <= t_min:
            raise ContractError("training times must not all be equal")
        km = km_density(SurvivalDataset(ds.features, times, ds.events, ds.columns, ds.kinds))
        km_at_time = np.array([km.mass_at(t) for t in times])
        return cls(ds.features, times, ds.events, km_at_time, time_grid(t_min, t_max, grid_size))


@dataclass
class Background:
    """单个任务的背景集"""

    embeddings: Union[Node, FloatArray]
    times: FloatArray
    events: IntArray
    exclude: Optional[np.ndarray] = None


class EpochLogWriter:
    """每个 epoch 一行 JSON 的训练日志"""

    def __init__(self, path: Optional[Path]) -> None:
        self._path = path
        self._handle: Optional[TextIO] = None

    def __enter__(self) -> EpochLogWriter:
        if self._path is not None:
            try:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                self._handle = open(self._path, "w", encoding="utf-8")
            except OSError as e:
                raise OSError(f"cannot write training log: {self._path} - {e}") from e
        return self

    def __exit__(self, *exc: object) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def write(self, record: EpochRecord) -> None:
        if self._handle is None:
            return
        self._handle.write(record.model_dump_json(by_alias=True) + "\n")
        self._handle.flush()


# ============================================================
# 单个任务
# ============================================================


def _pretraining_task(
    data: TrainingData, vae: VAE, batch_size: int, background_size: int, rng: np.random.Generator
) -> tuple[IntArray, Background]:
    """背景与批次互不相交，背景嵌入保留在计算图中"""
    r = min(background_size, data.n - 1)
    bg_idx = rng.choice(data.n, size=r, replace=False)
    rest = np.setdiff1d(np.arange(data.n), bg_idx)
    batch = rng.choice(rest, size=min(batch_size, rest.size), replace=False)
    bg_mu, _ = vae.encode(data.features[bg_idx])
    return batch, Background(bg_mu, data.times[bg_idx], data.events[bg_idx])


def _snapshot_task(
    data: TrainingData, snapshot: FloatArray, batch_size: int, rng: np.random.Generator
) -> tuple[IntArray, Background]:
    """全量背景快照，每个查询屏蔽自身"""
    batch = rng.choice(data.n, size=min(batch_size, data.n), replace=False)
    exclude = np.zeros((batch.size, data.n), dtype=bool)
    exclude[np.arange(batch.size), batch] = True
    return batch, Background(constant(snapshot), data.times, data.events, exclude)


def task_losses(
    data: TrainingData,
    vae: VAE,
    config: SurvGenConfig,
    batch: IntArray,
    bg: Background,
    rng: np.random.Generator,
) -> LossParts:
    """一个任务的四个损失分量"""
    weights = config.loss
    x = data.features[batch]
    t = data.times[batch]
    e = data.events[batch]
    b = batch.size
    tau, eta = vae.tau, vae.eta
    grid = data.grid.points

    mu, sigma = vae.encode(x)
    z = sample_embeddings(mu, sigma, config.train.n_embeddings, rng)
    latent_dim = z.shape[-1]

    out1 = beran_graph(mu, bg.embeddings, bg.times, bg.events, tau, bg.exclude)
    l_beran = soft_c_index(out1.expected_time, t, e, weights.gamma1)

    support, density = embedding_densities(z, bg.embeddings, bg.times, bg.events, tau, bg.exclude)
    traj = trajectory_from_densities(z, mu, sigma, support, density, eta, grid)

    v = grid.size
    exclude_grid = None if bg.exclude is None else np.repeat(bg.exclude, v, axis=0)
    out3 = beran_graph(
        P.reshape(traj.latent, (b * v, latent_dim)),
        bg.embeddings,
        bg.times,
        bg.events,
        tau,
        exclude_grid,
    )
    l_tr1 = trajectory_rank_loss(P.reshape(out3.expected_time, (b, v)), grid, weights.gamma3)

    l_tr2 = _likelihood_term(data, batch, bg, z, mu, sigma, support, density, vae, config)

    t_gen = gumbel_sample_times(out1.times, out1.density.value, rng)
    k = data.grid.nearest(t_gen)
    x_hat = vae.decode(P.slice_(traj.latent, (np.arange(b), k)))
    z_first = P.slice_(z, (slice(None), 0))
    ref = rng.standard_normal((b, latent_dim))
    l_wae = wae_loss(x, x_hat, z_first, ref, weights.gamma2, weights.mmd_lambda)
    return LossParts(l_beran, l_wae, l_tr1, l_tr2)


def _likelihood_term(
    data: TrainingData,
    batch: IntArray,
    bg: Background,
    z: Node,
    mu: Node,
    sigma: Node,
    support: FloatArray,
    density: Node,
    vae: VAE,
    config: SurvGenConfig,
) -> Node:
    """未删失实例在 ξ_z(T_i) 处的平滑密度，按 KM 密度 softmin 加权"""
    uncensored = np.flatnonzero(data.events[batch] == 1)
    if uncensored.size == 0:
        return trajectory_likelihood_loss(np.zeros(0), np.zeros(0), config.loss.gamma4)
    t_u = data.times[batch][uncensored]
    traj = trajectory_from_densities(
        P.slice_(z, uncensored),
        P.slice_(mu, uncensored),
        P.slice_(sigma, uncensored),
        support,
        P.slice_(density, uncensored),
        vae.eta,
        t_u[:, None],
    )
    xi = P.reshape(traj.latent, (uncensored.size, z.shape[-1]))
    exclude = None if bg.exclude is None else bg.exclude[uncensored]
    out = beran_graph(xi, bg.embeddings, bg.times, bg.events, vae.tau, exclude)
    smoothed = smoothed_density_graph(t_u, out.times, out.density, vae.eta)
    km = data.km_at_time[batch][uncensored]
    return trajectory_likelihood_loss(smoothed, km, config.loss.gamma4)


def run_task(
    data: TrainingData,
    vae: VAE,
    optimizer: Adam,
    config: SurvGenConfig,
    rng: np.random.Generator,
    snapshot: Optional[FloatArray] = None,
) -> dict[str, float]:
    """执行一个任务并更新参数

    Args:
        snapshot: 全量背景快照；None 表示仍处于预热阶段

    Returns:
        各损失分量与总损失的数值

    Raises:
        NumericalError: 损失或梯度非有限
    """
    if snapshot is None:
        batch, bg = _pretraining_task(
            data, vae, config.train.batch_size, config.train.background_size, rng
        )
    else:
        batch, bg = _snapshot_task(data, snapshot, config.train.batch_size, rng)

    parts = task_losses(data, vae, config, batch, bg, rng)
    loss = total_loss(parts)
    grads = backward(loss)
    for node, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericalError(node.name or node.op, "gradient is not finite")
    optimizer.step(grads)
    values = parts.values()
    values["total"] = loss.item()
    return values


# ============================================================
# 完整训练
# ============================================================


def encode_means(vae: VAE, features: FloatArray) -> FloatArray:
    mu, _ = vae.encode(features)
    return mu.value


def holdout_c_index(vae: VAE, train: TrainingData, holdout: TrainingData) -> Optional[float]:
    """用训练集 μ 作背景，计算 hold-out 实例期望时间的 C-index"""
    background = encode_means(vae, train.features)
    query = encode_means(vae, holdout.features)
    out = beran_graph(query, background, train.times, train.events, vae.tau.value)
    return c_index_hard(out.expected_time.value, holdout.times, holdout.events)


def default_schema(ds: SurvivalDataset) -> DataSchema:
    """没有 schema 时按编码列生成一个全连续特征 schema"""
    return DataSchema([FeatureSpec(name) for name in ds.columns])


def _split_holdout(
    n: int, fraction: float, rng: np.random.Generator
) -> tuple[IntArray, Optional[IntArray]]:
    if fraction <= 0.0:
        return np.arange(n), None
    n_holdout = int(round(n * fraction))
    if n_holdout < 1 or n - n_holdout < 2:
        logger.warning("holdout fraction %.2f too small or large for %d rows, ignored", fraction, n)
        return np.arange(n), None
    order = rng.permutation(n)
    return np.sort(order[n_holdout:]), np.sort(order[:n_holdout])


def fit(
    dataset: SurvivalDataset,
    config: SurvGenConfig,
    rng: Optional[Union[int, np.random.Generator]] = None,
    schema: Optional[DataSchema] = None,
    log_path: Optional[Path] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainedModel:
    """训练 VAE 与删失分类器

    Args:
        dataset: 原始单位的训练集
        config: 完整配置
        rng: 随机种子或生成器，None 时使用 config.train.seed
        schema: 原始特征 schema，用于之后的解码与导出
        log_path: JSONL 训练日志路径
        on_epoch: 每个 epoch 结束时的回调

    Returns:
        TrainedModel

    Raises:
        ContractError: 训练集少于 2 行或时间全相同
        NumericalError: 训练中出现非有限值
    """
    if len(dataset) < 2:
        raise ContractError(f"training needs at least 2 instances, got {len(dataset)}")
    init_rng, task_rng, cls_rng, split_rng = spawn_generators(
        config.train.seed if rng is None else rng, 4
    )
    train_cfg = config.train

    # 标准化统计量与时间尺度只取自训练部分
    train_idx, holdout_idx = _split_holdout(len(dataset), train_cfg.holdout_fraction, split_rng)
    train_raw = dataset.subset(train_idx)
    scaler = FeatureScaler.fit(train_raw.features, train_raw.kinds, train_raw.columns)
    time_scale = float(np.std(train_raw.times)) or 1.0

    data = TrainingData.prepare(scaler.standardize(train_raw), time_scale, train_cfg.grid_size)
    holdout = None
    if holdout_idx is not None:
        held = scaler.standardize(dataset.subset(holdout_idx))
        holdout = TrainingData(
            held.features, held.times / time_scale, held.events, np.zeros(len(held)), data.grid
        )

    vae = VAE(dataset.n_features, config.model, init_rng)
    optimizer = Adam(vae.parameters(), lr=train_cfg.learning_rate)
    n_tasks = train_cfg.tasks_per_epoch or math.ceil(data.n / train_cfg.batch_size)
    if train_cfg.background_size >= data.n:
        logger.info(
            "background size %d reduced to %d during warmup", train_cfg.background_size, data.n - 1
        )
    logger.info(
        "training on %d instances: %d epochs x %d tasks, warmup %d",
        data.n,
        train_cfg.epochs,
        n_tasks,
        train_cfg.warmup_epochs,
    )

    with EpochLogWriter(log_path) as log:
        for epoch in range(train_cfg.epochs):
            snapshot = None
            if epoch >= train_cfg.warmup_epochs:
                snapshot = encode_means(vae, data.features)
            totals = {"L_Beran": 0.0, "L_WAE": 0.0, "L_Tr1": 0.0, "L_Tr2": 0.0, "total": 0.0}
            for _ in range(n_tasks):
                values = run_task(data, vae, optimizer, config, task_rng, snapshot)
                for key, value in values.items():
                    totals[key] += value / n_tasks
            record = EpochRecord(
                epoch=epoch + 1,
                holdout_c_index=None if holdout is None else holdout_c_index(vae, data, holdout),
                **totals,
            )
            logger.debug("epoch %d: %s", epoch + 1, record.model_dump(by_alias=True))
            log.write(record)
            if on_epoch is not None:
                on_epoch(record)

    classifier = train_censor_classifier(
        data.features, train_raw.times, train_raw.events, config.classifier, cls_rng
    )
    return TrainedModel(
        vae=vae,
        config=config,
        schema=schema or default_schema(dataset),
        scaler=scaler,
        time_scale=time_scale,
        background=encode_means(vae, data.features),
        background_times=data.times,
        background_events=data.events,
        grid=data.grid,
        classifier=classifier,
    )
