"""重复随机划分交叉验证

每次重复按 train_fraction 随机划分，训练模型并在测试集上计算期望时间的硬 C-index。
可选地同时评估直接作用于标准化特征的 Beran 估计器基线。
"""

from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.config.manager import SurvGenConfig
from src.datasets.io import DataSchema
from src.datasets.scaling import FeatureScaler
from src.errors import ContractError
from src.model.inference import predict
from src.survival.graph import beran_graph
from src.survival.metrics import c_index_hard
from src.survival.sampling import spawn_generators
from src.survival.types import FloatArray, IntArray, SurvivalDataset
from src.training.trainer import fit
from src.types import CrossValReport

logger = logging.getLogger(__name__)

RepCallback = Callable[[int, Optional[float]], None]


def split_indices(
    n: int, train_fraction: float, rng: np.random.Generator
) -> tuple[IntArray, IntArray]:
    """随机划分为 (训练下标, 测试下标)，两边至少各 1 行"""
    if n < 2:
        raise ContractError(f"cannot split {n} instances into train and test")
    n_train = min(max(int(round(n * train_fraction)), 1), n - 1)
    order = rng.permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def beran_baseline_predict(
    train: SurvivalDataset, test: SurvivalDataset, tau: float
) -> FloatArray:
    """标准化原始特征上的 Beran 估计器期望时间"""
    scaler = FeatureScaler.fit(train.features, train.kinds, train.columns)
    out = beran_graph(
        scaler.transform(test.features),
        scaler.transform(train.features),
        train.times,
        train.events,
        tau,
    )
    return out.expected_time.value


def select_baseline_tau(
    train: SurvivalDataset,
    taus: Sequence[float],
    train_fraction: float,
    rng: np.random.Generator,
) -> float:
    """在训练集内部再划分一次，取 hold-out C-index 最高的 τ（并列取先出现者）"""
    if not taus:
        raise ContractError("baseline needs at least one candidate tau")
    inner_train, inner_test = split_indices(len(train), train_fraction, rng)
    fit_part, eval_part = train.subset(inner_train), train.subset(inner_test)
    best_tau, best_score = float(taus[0]), -np.inf
    for tau in taus:
        pred = beran_baseline_predict(fit_part, eval_part, tau)
        score = c_index_hard(pred, eval_part.times, eval_part.events)
        if score is not None and score > best_score:
            best_tau, best_score = float(tau), score
    return best_tau


def _summary(values: list[Optional[float]]) -> tuple[Optional[float], Optional[float]]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None, None
    return float(np.mean(defined)), float(np.std(defined))


def cross_validate(
    ds: SurvivalDataset,
    config: SurvGenConfig,
    reps: Optional[int] = None,
    rng: Optional[Union[int, np.random.Generator]] = None,
    include_baseline: bool = False,
    schema: Optional[DataSchema] = None,
    on_rep: Optional[RepCallback] = None,
) -> CrossValReport:
    """重复随机划分交叉验证

    Args:
        ds: 原始单位数据集
        config: 完整配置，划分比例与基线 τ 候选取自 config.eval
        reps: 重复次数，None 时使用 config.eval.reps
        rng: 根随机种子或生成器，None 时使用 config.train.seed
        include_baseline: 是否同时评估 Beran 基线
        schema: 传给训练的特征 schema
        on_rep: 每次重复结束时的回调 (rep 序号, C-index)

    Returns:
        CrossValReport：未定义的 C-index 记为 None，不计入均值

    Raises:
        ContractError: reps < 1 或数据不足 2 行
    """
    n_reps = config.eval.reps if reps is None else reps
    if n_reps < 1:
        raise ContractError(f"cross-validation needs reps >= 1, got {n_reps}")
    streams = spawn_generators(config.train.seed if rng is None else rng, n_reps)

    scores: list[Optional[float]] = []
    baseline: list[Optional[float]] = []
    taus: list[float] = []
    for rep, stream in enumerate(streams):
        split_rng, fit_rng, predict_rng, tau_rng = spawn_generators(stream, 4)
        train_idx, test_idx = split_indices(len(ds), config.eval.train_fraction, split_rng)
        train, test = ds.subset(train_idx), ds.subset(test_idx)

        model = fit(train, config, fit_rng, schema=schema)
        prediction = predict(model, test.features, predict_rng)
        score = c_index_hard(prediction.expected_time, test.times, test.events)
        if score is None:
            logger.warning("repetition %d has an undefined C-index", rep + 1)
        scores.append(score)

        if include_baseline:
            tau = select_baseline_tau(
                train, config.eval.beran_taus, config.eval.train_fraction, tau_rng
            )
            pred = beran_baseline_predict(train, test, tau)
            taus.append(tau)
            baseline.append(c_index_hard(pred, test.times, test.events))
        logger.info("repetition %d/%d: C-index %s", rep + 1, n_reps, score)
        if on_rep is not None:
            on_rep(rep + 1, score)

    mean, std = _summary(scores)
    report = CrossValReport(
        c_index=scores,
        mean=mean,
        std=std,
        n_undefined=sum(v is None for v in scores),
        config=config.model_dump(),
    )
    if include_baseline:
        report.baseline_c_index = baseline
        report.baseline_mean, report.baseline_std = _summary(baseline)
        report.baseline_taus = taus
    return report
