"""训练目标

L = -L_Beran + L_WAE - (L_Tr1 + L_Tr2)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import ArrayLike, Node, as_node, constant
from src.errors import NumericalError
from src.model.vae import mmd_penalty
from src.survival.types import FloatArray, IntArray

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


def soft_c_index(pred: ArrayLike, times: FloatArray, events: IntArray, gamma: float) -> Node:
    """sigmoid 软化的 C-index

    γ·Σ_{i,j} 1[t_j < t_i]·σ(T̂_i - T̂_j)·δ_j / Σ_{i,j} 1[t_j < t_i]·δ_j

    pred 可以是 (n,) 或 (B, n)；后者对 B 行取平均。没有可比较对时返回 0。
    """
    node = as_node(pred)
    t = np.asarray(times, dtype=np.float64).reshape(-1)
    e = np.asarray(events, dtype=np.float64).reshape(-1)
    n = t.size
    mask = (t[None, :] < t[:, None]) * e[None, :]
    total = float(mask.sum())
    if total == 0.0:
        logger.warning("soft C-index has no comparable pairs among %d instances", n)
        return constant(0.0)
    rows = P.reshape(node, (-1, n))
    b = rows.shape[0]
    diff = P.reshape(rows, (b, n, 1)) - P.reshape(rows, (b, 1, n))
    per_row = P.sum_(P.sum_(P.sigmoid(diff) * constant(mask), axis=-1), axis=-1)
    return P.mean(per_row) * (gamma / total)


def wae_loss(
    x: ArrayLike,
    x_hat: ArrayLike,
    z: ArrayLike,
    ref: ArrayLike,
    gamma2: float,
    lam: float,
) -> Node:
    """(γ_2 / n)·Σ‖x_i - x̂_i‖² + MMD(z, ref)；n < 2 时跳过 MMD"""
    x_node, x_hat_node = as_node(x), as_node(x_hat)
    reconstruction = P.mean(P.sq_norm(x_node - x_hat_node, axis=-1)) * gamma2
    n = x_node.shape[0]
    if n < 2:
        logger.warning("MMD penalty skipped: batch of %d instance", n)
        return reconstruction
    return reconstruction + mmd_penalty(z, ref, lam)


def trajectory_rank_loss(expected: ArrayLike, grid: FloatArray, gamma3: float) -> Node:
    """网格点期望时间的软 C-index，网格点均视为未删失；v < 2 时为 0"""
    points = np.asarray(grid, dtype=np.float64).reshape(-1)
    if points.size < 2:
        return constant(0.0)
    return soft_c_index(expected, points, np.ones(points.size, dtype=np.int64), gamma3)


def trajectory_likelihood_loss(
    densities: ArrayLike, km_densities: FloatArray, gamma4: float
) -> Node:
    """γ_4·Σ_i α_i·log(π̃_i + 1e-12)，α = softmin(KM 密度)

    Args:
        densities: (n_u,) 未删失实例在 T_i 处的平滑密度
        km_densities: (n_u,) Kaplan-Meier 密度在 T_i 处的值
        gamma4: 权重
    """
    node = as_node(densities)
    if node.value.size == 0:
        logger.warning("trajectory likelihood skipped: no uncensored instances in batch")
        return constant(0.0)
    alpha = P.softmin(constant(np.asarray(km_densities, dtype=np.float64)), axis=-1)
    log_density = P.log(node + LOG_FLOOR)
    return P.sum_(alpha * log_density) * gamma4


@dataclass
class LossParts:
    """总损失的四个分量"""

    beran: Node
    wae: Node
    tr1: Node
    tr2: Node

    def values(self) -> dict[str, float]:
        return {
            "L_Beran": self.beran.item(),
            "L_WAE": self.wae.item(),
            "L_Tr1": self.tr1.item(),
            "L_Tr2": self.tr2.item(),
        }


def total_loss(parts: LossParts) -> Node:
    """L = -L_Beran + L_WAE - (L_Tr1 + L_Tr2)

    Raises:
        NumericalError: 某个分量非有限
    """
    for name, value in parts.values().items():
        if not np.isfinite(value):
            raise NumericalError(name, f"loss part is {value}")
    return -parts.beran + parts.wae - (parts.tr1 + parts.tr2)
