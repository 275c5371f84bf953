"""合成生存数据集

三种二维几何结构：沿直线分布的两个簇、两条交错的抛物线、两个重叠的圆弧扇区。
删失按比例随机指定，删失记录的时间乘以 Uniform(0.5, 1) 因子。
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from src.errors import ContractError
from src.survival.types import FloatArray, SurvivalDataset

SynthFn = Callable[..., SurvivalDataset]

# 直线簇：每个簇由两团云的中心张成
LINE_CENTERS = (
    ((0.0, 0.0), (10.0, 0.0)),
    ((0.0, 8.0), (10.0, 8.0)),
)
LINE_TIME_RANGE = (1.0, 100.0)

# 抛物线 x2 = a·x1² + b，x1 ∈ [0, 10]
PARABOLAS = ((0.15, 0.0), (-0.15, 15.0))
PARABOLA_X1_RANGE = (0.0, 10.0)
PARABOLA_TIME = (10.0, 9.0)

# 圆弧扇区：(圆心, 半径, 起始角, 终止角, 基准时间)
CIRCLES = (
    ((0.0, 0.0), 3.0, 0.0, 1.5 * np.pi, 10.0),
    ((2.0, 0.0), 3.0, np.pi, 2.5 * np.pi, 100.0),
)
CIRCLE_TIME_NOISE = 0.5


def _check_size(n: int) -> None:
    if n < 1:
        raise ContractError(f"synthetic generators need n >= 1, got {n}")


def apply_censoring(
    times: FloatArray, rng: np.random.Generator, censoring_rate: float = 0.2
) -> tuple[FloatArray, np.ndarray]:
    """随机选取 censoring_rate 比例的记录标记为删失并缩短其时间"""
    if not 0.0 <= censoring_rate <= 1.0:
        raise ContractError(f"censoring rate must lie in [0, 1], got {censoring_rate}")
    n = times.size
    events = np.ones(n, dtype=np.int64)
    n_censored = int(round(censoring_rate * n))
    censored = rng.choice(n, size=n_censored, replace=False)
    events[censored] = 0
    times = times.copy()
    times[censored] *= rng.uniform(0.5, 1.0, size=n_censored)
    return times, events


def _shuffle(
    features: FloatArray, times: FloatArray, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    order = rng.permutation(times.size)
    return features[order], times[order]


def synth_linear(
    n: int = 200,
    noise: float = 0.5,
    rng: Optional[np.random.Generator] = None,
    censoring_rate: float = 0.2,
) -> SurvivalDataset:
    """两个沿直线分布的簇，每簇 n 个点

    点为两团正态云中心的凸组合（系数均匀），事件时间沿直线参数均匀分布。
    """
    _check_size(n)
    rng = rng if rng is not None else np.random.default_rng()
    features, times = [], []
    for (a, b) in LINE_CENTERS:
        lam = rng.uniform(0.0, 1.0, size=n)
        start = np.asarray(a) + noise * rng.standard_normal((n, 2))
        end = np.asarray(b) + noise * rng.standard_normal((n, 2))
        features.append((1.0 - lam)[:, None] * start + lam[:, None] * end)
        lo, hi = LINE_TIME_RANGE
        times.append(lo + lam * (hi - lo))
    x, t = _shuffle(np.vstack(features), np.concatenate(times), rng)
    t, events = apply_censoring(t, rng, censoring_rate)
    return SurvivalDataset(x, t, events, ["x1", "x2"])


def synth_two_parabolas(
    n: int = 200,
    noise: float = 0.3,
    rng: Optional[np.random.Generator] = None,
    censoring_rate: float = 0.2,
) -> SurvivalDataset:
    """两条交错的抛物线，每条 n 个点；时间为 x1 的仿射函数"""
    _check_size(n)
    rng = rng if rng is not None else np.random.default_rng()
    features, times = [], []
    base, slope = PARABOLA_TIME
    for a, b in PARABOLAS:
        x1 = rng.uniform(*PARABOLA_X1_RANGE, size=n)
        x2 = a * x1**2 + b
        times.append(base + slope * x1)
        points = np.column_stack([x1, x2]) + noise * rng.standard_normal((n, 2))
        features.append(points)
    x, t = _shuffle(np.vstack(features), np.concatenate(times), rng)
    t, events = apply_censoring(t, rng, censoring_rate)
    return SurvivalDataset(x, t, events, ["x1", "x2"])


def synth_two_circles(
    n: int = 200,
    noise: float = 0.2,
    rng: Optional[np.random.Generator] = None,
    censoring_rate: float = 0.2,
) -> SurvivalDataset:
    """两个重叠的圆弧扇区；同一圆内时间近似常数，两圆基准时间相差很大"""
    _check_size(n)
    rng = rng if rng is not None else np.random.default_rng()
    features, times = [], []
    for center, radius, start, stop, base_time in CIRCLES:
        angle = rng.uniform(start, stop, size=n)
        r = radius + noise * rng.standard_normal(n)
        points = np.asarray(center) + r[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])
        features.append(points)
        times.append(np.clip(base_time + CIRCLE_TIME_NOISE * rng.standard_normal(n), 0.0, None))
    x, t = _shuffle(np.vstack(features), np.concatenate(times), rng)
    t, events = apply_censoring(t, rng, censoring_rate)
    return SurvivalDataset(x, t, events, ["x1", "x2"])


SYNTHETIC_KINDS: dict[str, SynthFn] = {
    "linear": synth_linear,
    "parabolas": synth_two_parabolas,
    "circles": synth_two_circles,
}
