"""生成数据保真度：两组数据 Kaplan-Meier 曲线的最大偏差"""

from __future__ import annotations

import numpy as np

from src.errors import ContractError
from src.survival.estimators import kaplan_meier
from src.survival.types import SurvivalDataset
from src.types import KMComparison


def km_fidelity(original: SurvivalDataset, generated: SurvivalDataset) -> float:
    """合并时间网格上 |S_orig(t) - S_gen(t)| 的上确界

    两条曲线均为右连续阶梯函数，上确界在合并后的跳跃点上取到，结果对参数对称。

    Raises:
        ContractError: 任一数据集为空
    """
    if len(original) == 0 or len(generated) == 0:
        raise ContractError("KM fidelity needs two nonempty datasets")
    sf_a, sf_b = kaplan_meier(original), kaplan_meier(generated)
    grid = np.union1d(sf_a.times, sf_b.times)
    return float(np.max(np.abs(sf_a(grid) - sf_b(grid))))


def compare_km(original: SurvivalDataset, generated: SurvivalDataset) -> KMComparison:
    return KMComparison(
        max_deviation=km_fidelity(original, generated),
        censoring_rate_original=original.censoring_rate,
        censoring_rate_generated=generated.censoring_rate,
        n_original=len(original),
        n_generated=len(generated),
    )
