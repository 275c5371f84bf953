"""非参数生存估计器

Kaplan-Meier 乘积极限估计、核权重、Beran 条件生存函数、
生存函数与离散密度之间的转换、期望事件时间。
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy import special

from src.autodiff.engine import as_tensor
from src.errors import ContractError
from src.survival.graph import beran_graph
from src.survival.types import (
    DiscreteEventDistribution,
    FloatArray,
    IntArray,
    StepSurvivalFunction,
    SurvivalDataset,
)

Embedding = Union[FloatArray, list[float]]


def kaplan_meier(ds: SurvivalDataset) -> StepSurvivalFunction:
    """Kaplan-Meier 乘积极限估计

    在每个不同时间点 t_j 上 S 乘以 (1 - d_j / n_j)，其中 d_j 为该时刻事件数，
    n_j 为风险集大小。仅含删失的时间点保留在支撑上，S 不下降。

    Raises:
        ContractError: 数据集为空
    """
    if len(ds) == 0:
        raise ContractError("Kaplan-Meier estimator needs a nonempty dataset")
    times, inverse = np.unique(ds.times, return_inverse=True)
    deaths = np.bincount(inverse, weights=ds.events.astype(np.float64), minlength=times.size)
    counts = np.bincount(inverse, minlength=times.size).astype(np.float64)
    at_risk = len(ds) - np.concatenate(([0.0], np.cumsum(counts)[:-1]))
    survival = np.cumprod(1.0 - deaths / at_risk)
    return StepSurvivalFunction(times, survival)


def km_density(ds: SurvivalDataset) -> DiscreteEventDistribution:
    """Kaplan-Meier 生存函数对应的离散事件分布"""
    return sf_to_density(kaplan_meier(ds))


def kernel_weights(query: Embedding, background: FloatArray, tau: float) -> FloatArray:
    """核权重 softmax(-‖query - background_i‖² / τ)

    Raises:
        ContractError: τ ≤ 0 或背景为空
    """
    if tau <= 0:
        raise ContractError(f"kernel temperature must be positive, got {tau}")
    bg = np.atleast_2d(as_tensor(background))
    if bg.shape[0] == 0:
        raise ContractError("kernel weights need a nonempty background")
    dist = np.sum((bg - as_tensor(query)) ** 2, axis=1)
    return np.asarray(special.softmax(-dist / tau))


def beran_sf(
    query: Embedding,
    background: FloatArray,
    times: FloatArray,
    events: IntArray,
    tau: float,
) -> StepSurvivalFunction:
    """Beran 条件生存函数

    S(t|query) = Π_{T_i ≤ t} (1 - W_i / (1 - Σ_{j<i} W_j))^{δ_i}，
    分母下限为 1e-8，每个因子裁剪到 [0, 1]。

    Args:
        query: 查询嵌入
        background: (r, d) 背景嵌入
        times: (r,) 背景时间
        events: (r,) 背景删失指示
        tau: 核温度

    Returns:
        StepSurvivalFunction: 以背景的不同时间点为支撑
    """
    q = as_tensor(query).reshape(1, -1)
    out = beran_graph(q, np.atleast_2d(as_tensor(background)), times, events, tau)
    return StepSurvivalFunction(out.times, out.survival.value[0])


def sf_to_density(sf: StepSurvivalFunction) -> DiscreteEventDistribution:
    """p_j = S_{j-1} - S_j，剩余质量 S_n"""
    before = np.concatenate(([1.0], sf.values[:-1]))
    masses = before - sf.values
    residual = float(sf.values[-1]) if len(sf) else 1.0
    return DiscreteEventDistribution(sf.times.copy(), masses, residual)


def expected_event_time(sf: StepSurvivalFunction) -> float:
    """期望事件时间 Σ_{i=0}^{n-1} S_i (t_{i+1} - t_i)，约定 t_0 = 0, S_0 = 1"""
    if len(sf) == 0:
        raise ContractError("expected time needs a nonempty survival function")
    before = np.concatenate(([1.0], sf.values[:-1]))
    gaps = np.diff(np.concatenate(([0.0], sf.times)))
    return float(np.sum(before * gaps))
