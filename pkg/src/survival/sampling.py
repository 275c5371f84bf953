"""Gumbel-max 采样"""

from __future__ import annotations

from typing import Union

import numpy as np

from src.errors import ContractError
from src.survival.types import DiscreteEventDistribution, FloatArray


def gumbel_argmax(log_masses: FloatArray, rng: np.random.Generator) -> np.ndarray:
    """对最后一维做 argmax(log p + G)，G 为独立标准 Gumbel 噪声"""
    noise = rng.gumbel(size=np.shape(log_masses))
    return np.argmax(log_masses + noise, axis=-1)


def atom_log_masses(masses: FloatArray, residual: Union[FloatArray, float]) -> FloatArray:
    """剩余质量并入最后一个支撑点后的对数质量；零质量为 -inf"""
    folded = np.array(masses, dtype=np.float64, copy=True)
    folded[..., -1] += residual
    with np.errstate(divide="ignore"):
        return np.log(np.clip(folded, 0.0, None))


def gumbel_sample_time(dist: DiscreteEventDistribution, rng: np.random.Generator) -> float:
    """按离散事件分布抽取一个时间点

    剩余质量 p_∞ 映射到最后一个时间点 t_n。

    Raises:
        ContractError: 所有质量均为 0
    """
    if dist.times.size == 0 or (not np.any(dist.masses > 0) and dist.residual <= 0):
        raise ContractError("cannot sample from a distribution without mass")
    index = int(gumbel_argmax(atom_log_masses(dist.masses, dist.residual), rng))
    return float(dist.times[index])


def gumbel_sample_times(
    times: FloatArray, masses: FloatArray, rng: np.random.Generator
) -> FloatArray:
    """批量版本：masses 为 (B, u) 离散密度，行剩余质量由 1 - Σp 给出"""
    m = np.clip(np.asarray(masses, dtype=np.float64), 0.0, None)
    residual = np.clip(1.0 - m.sum(axis=-1), 0.0, None)
    log_p = atom_log_masses(m, residual)
    if np.any(np.all(np.isneginf(log_p), axis=-1)):
        raise ContractError("cannot sample from a distribution without mass")
    return np.asarray(times, dtype=np.float64)[gumbel_argmax(log_p, rng)]


def spawn_generators(
    root: Union[int, np.random.Generator], count: int
) -> list[np.random.Generator]:
    """从整数种子或已有生成器派生 count 个独立随机流"""
    if isinstance(root, np.random.Generator):
        seeds = root.integers(0, 2**63 - 1, size=count)
        return [np.random.default_rng(int(s)) for s in seeds]
    return [np.random.default_rng(s) for s in np.random.SeedSequence(root).spawn(count)]
