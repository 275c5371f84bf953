"""可微 Beran 估计器

批量查询嵌入对同一背景集计算 Beran 生存函数、离散密度和期望时间。
背景按时间升序逐条处理（同时间事件先于删失），再按不同时间点汇总。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import ArrayLike, Node, as_node, constant
from src.errors import ContractError, ShapeError
from src.survival.types import FloatArray, IntArray, sorted_order

DENOMINATOR_FLOOR = 1e-8
EXCLUDED_LOGIT = -1e30


@dataclass
class BeranOutput:
    """Beran 估计结果

    Attributes:
        times: (u,) 背景中的不同时间点
        survival: (B, u) 各时间点处的 S
        density: (B, u) 离散密度 S_{j-1} - S_j
        expected_time: (B,) 期望事件时间
        weights: (B, r) 核权重（背景原顺序）
    """

    times: FloatArray
    survival: Node
    density: Node
    expected_time: Node
    weights: Node


def _distinct_groups(sorted_times: FloatArray) -> tuple[FloatArray, FloatArray]:
    """返回不同时间点与选取每组最后一项的矩阵 (r, u)"""
    distinct = np.unique(sorted_times)
    r, u = sorted_times.size, distinct.size
    last = np.zeros((r, u))
    last_rows = np.searchsorted(sorted_times, distinct, side="right") - 1
    last[last_rows, np.arange(u)] = 1.0
    return distinct, last


def kernel_logits(query: Node, background: Node, tau: ArrayLike) -> Node:
    """-‖query_b - background_i‖² / τ，形状 (B, r)

    距离按 ‖q‖² + ‖b‖² - 2 q·b 展开，避免构造 (B, r, d) 的差张量。
    """
    if query.shape[-1] != background.shape[-1]:
        raise ShapeError("kernel", query.shape, background.shape)
    r = background.shape[0]
    q_sq = P.sq_norm(query, axis=-1, keepdims=True)
    b_sq = P.reshape(P.sq_norm(background, axis=-1), (1, r))
    dist = q_sq + b_sq - 2.0 * (query @ P.swap_last(background))
    return -(dist * P.reciprocal(tau))


def beran_graph(
    query: ArrayLike,
    background: ArrayLike,
    times: FloatArray,
    events: IntArray,
    tau: ArrayLike,
    exclude: Optional[np.ndarray] = None,
) -> BeranOutput:
    """批量可微 Beran 估计

    Args:
        query: (B, d) 查询嵌入
        background: (r, d) 背景嵌入
        times: (r,) 背景事件时间
        events: (r,) 背景删失指示
        tau: 核温度（标量节点或常数）
        exclude: (B, r) 布尔掩码，True 表示该背景项不参与对应查询的加权

    Returns:
        BeranOutput

    Raises:
        ContractError: 背景为空或 τ ≤ 0
    """
    q = as_node(query)
    bg = as_node(background)
    tau_node = as_node(tau)
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    events = np.asarray(events).reshape(-1)
    if q.value.ndim != 2 or bg.value.ndim != 2:
        raise ShapeError("beran", q.shape, bg.shape)
    if bg.shape[0] == 0:
        raise ContractError("Beran estimator needs a nonempty background")
    if times.size != bg.shape[0] or events.size != bg.shape[0]:
        raise ShapeError("beran", bg.shape, times.shape, events.shape)
    if not np.all(tau_node.value > 0):
        raise ContractError(f"kernel temperature must be positive, got {tau_node.value}")

    logits = kernel_logits(q, bg, tau_node)
    if exclude is not None:
        mask = np.asarray(exclude, dtype=bool)
        if mask.shape != logits.shape:
            raise ShapeError("beran exclude", mask.shape, logits.shape)
        logits = logits + constant(np.where(mask, EXCLUDED_LOGIT, 0.0))
    weights = P.softmax(logits, axis=-1)

    order = sorted_order(times, events)
    sorted_times = times[order]
    delta = events[order].astype(np.float64)
    w = P.slice_(weights, (slice(None), order))

    cum = P.cumsum(w, axis=-1)
    remaining = P.clamp(1.0 - (cum - w), lo=DENOMINATOR_FLOOR)
    factor = P.clamp(1.0 - w * P.reciprocal(remaining), lo=0.0, hi=1.0)
    factor = factor * constant(delta) + constant(1.0 - delta)
    item_survival = P.cumprod(factor, axis=-1)

    distinct, last = _distinct_groups(sorted_times)
    survival = item_survival @ constant(last)
    n_query = q.shape[0]
    ones = constant(np.ones((n_query, 1)))
    before = P.concat([ones, P.slice_(survival, (slice(None), slice(None, -1)))], axis=-1)
    density = before - survival
    gaps = np.diff(np.concatenate(([0.0], distinct)))
    expected = P.sum_(before * constant(gaps), axis=-1)
    return BeranOutput(distinct, survival, density, expected, weights)
