"""一致性指数 (C-index)"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from src.errors import ContractError
from src.survival.types import FloatArray, IntArray

logger = logging.getLogger(__name__)


def comparable_pairs(times: FloatArray, events: IntArray) -> np.ndarray:
    """(n, n) 可比较对掩码：T_i < T_j 且 δ_i = 1"""
    t = np.asarray(times, dtype=np.float64)
    e = np.asarray(events).astype(bool)
    return (t[:, None] < t[None, :]) & e[:, None]


def c_index_hard(pred: FloatArray, times: FloatArray, events: IntArray) -> Optional[float]:
    """硬 C-index

    Σ 1[T_i < T_j]·1[T̂_i < T̂_j]·δ_i / Σ 1[T_i < T_j]·δ_i，预测值相等的对计 0。

    Args:
        pred: 预测事件时间 T̂
        times: 真实时间 T
        events: 删失指示 δ

    Returns:
        [0, 1] 内的值；没有可比较对时返回 None
    """
    p = np.asarray(pred, dtype=np.float64)
    if p.shape != np.shape(times) or p.shape != np.shape(events):
        raise ContractError(
            f"C-index inputs differ in length: {p.shape}, {np.shape(times)}, {np.shape(events)}"
        )
    admissible = comparable_pairs(times, events)
    denominator = int(admissible.sum())
    if denominator == 0:
        logger.warning("C-index undefined: no comparable pairs among %d instances", p.size)
        return None
    concordant = admissible & (p[:, None] < p[None, :])
    return float(concordant.sum()) / denominator
