"""原型轨迹

对一个输入的 m 个采样嵌入，用 Beran 密度（softmin 平滑）与先验密度按 Bayes 规则
加权，得到嵌入空间轨迹 ξ_z(t)，再经解码器得到特征空间轨迹 ξ_x(t)。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import ArrayLike, Node, Tensor, as_node, as_tensor, constant
from src.errors import ContractError, ShapeError
from src.survival.graph import beran_graph
from src.survival.types import DiscreteEventDistribution, FloatArray, IntArray

WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class TimeGrid:
    """等距时间网格 t_1..t_v（不含 t_0 = t_min）"""

    points: FloatArray

    def __len__(self) -> int:
        return int(self.points.size)

    def nearest(self, t: ArrayLike) -> np.ndarray:
        """距 t 最近的网格下标"""
        values = np.asarray(t.value if isinstance(t, Node) else t, dtype=np.float64)
        return np.argmin(np.abs(values[..., None] - self.points), axis=-1)


@dataclass
class Trajectory:
    """单个输入的轨迹

    Attributes:
        grid: 时间网格（数据集时间单位）
        latent_points: (v, d_z) 嵌入轨迹
        feature_points: (v, d) 反标准化后的特征轨迹
        weights: (v, m) 每个网格点上各嵌入的权重 α_i(t_k)
    """

    grid: TimeGrid
    latent_points: FloatArray
    feature_points: FloatArray
    weights: FloatArray


@dataclass
class TrajectoryGraph:
    """计算图中的轨迹：alpha (B, k, m)，latent (B, k, d_z)"""

    alpha: Node
    latent: Node


def time_grid(t_min: float, t_max: float, v: int) -> TimeGrid:
    """t_k = t_{k-1} + (t_max - t_min) / v，t_0 = t_min

    Raises:
        ContractError: t_max ≤ t_min 或 v < 1
    """
    if t_max <= t_min:
        raise ContractError(f"time grid needs t_max > t_min, got [{t_min}, {t_max}]")
    if v < 1:
        raise ContractError(f"time grid needs at least one point, got v={v}")
    step = (t_max - t_min) / v
    points = t_min + step * np.arange(1, v + 1, dtype=np.float64)
    points[-1] = t_max
    return TimeGrid(points)


def prior_density(z: Tensor, mu: Tensor, sigma: Tensor) -> float:
    """未归一化正态密度 exp(-½ Σ_d (z_d - μ_d)² / σ_d²)

    Raises:
        ContractError: σ 含非正元素
    """
    z_arr, mu_arr, sigma_arr = as_tensor(z), as_tensor(mu), as_tensor(sigma)
    if z_arr.shape != mu_arr.shape or mu_arr.shape != sigma_arr.shape:
        raise ShapeError("prior_density", z_arr.shape, mu_arr.shape, sigma_arr.shape)
    if np.any(sigma_arr <= 0):
        raise ContractError("prior density needs strictly positive sigma")
    return float(np.exp(-0.5 * np.sum(((z_arr - mu_arr) / sigma_arr) ** 2)))


# ============================================================
# 平滑密度
# ============================================================


def smoothing_weights(points: Tensor, support: FloatArray, eta: ArrayLike) -> Node:
    """β_j(t) = softmin(η·|t - t_j|)，形状 points.shape + (u,)"""
    distance = np.abs(np.asarray(points, dtype=np.float64)[..., None] - support)
    return P.softmin(as_node(eta) * constant(distance), axis=-1)


def smoothed_density_graph(
    points: Tensor, support: FloatArray, density: ArrayLike, eta: ArrayLike
) -> Node:
    """π̃(t) = Σ_j β_j(t)·p_j，points 与 density 的前导维度一致"""
    beta = smoothing_weights(points, support, eta)
    return P.sum_(beta * as_node(density), axis=-1)


def smoothed_density(t: float, dist: DiscreteEventDistribution, eta: float) -> float:
    """离散分布在任意时刻 t 的平滑密度"""
    if dist.times.size == 0:
        raise ContractError("smoothed density needs a nonempty distribution")
    return smoothed_density_graph(np.asarray(t), dist.times, dist.masses, eta).item()


# ============================================================
# Bayes 权重
# ============================================================


def normalise_weights(numerators: ArrayLike) -> Node:
    """沿最后一维归一化；分子全为 0 的行退化为均匀权重"""
    num = as_node(numerators)
    degenerate = np.sum(num.value, axis=-1, keepdims=True) <= WEIGHT_FLOOR
    num = num + constant(np.broadcast_to(degenerate, num.shape).astype(np.float64))
    return num / P.sum_(num, axis=-1, keepdims=True)


def trajectory_weights(smoothed: Tensor, priors: Tensor) -> FloatArray:
    """α_i = π̃(t|z_i)·π(z_i) / Σ_l π̃(t|z_l)·π(z_l)"""
    s, p = as_tensor(smoothed), as_tensor(priors)
    if s.shape != p.shape:
        raise ShapeError("trajectory_weights", s.shape, p.shape)
    return normalise_weights(s * p).value


def log_prior_graph(z: Node, mu: ArrayLike, sigma: ArrayLike) -> Node:
    """(B, m) 的 -½ 二次型"""
    b, _, d = z.shape
    mu_node = P.reshape(as_node(mu), (b, 1, d))
    sigma_node = P.reshape(as_node(sigma), (b, 1, d))
    scaled = (z - mu_node) * P.reciprocal(sigma_node)
    return -0.5 * P.sq_norm(scaled, axis=-1)


def embedding_densities(
    z: Node,
    background: ArrayLike,
    times: FloatArray,
    events: IntArray,
    tau: ArrayLike,
    exclude: Optional[np.ndarray] = None,
) -> tuple[FloatArray, Node]:
    """每个采样嵌入的 Beran 离散密度，返回 (支撑时间, (B, m, u) 密度)"""
    b, m, d = z.shape
    mask = None if exclude is None else np.repeat(np.asarray(exclude, dtype=bool), m, axis=0)
    out = beran_graph(P.reshape(z, (b * m, d)), background, times, events, tau, mask)
    u = out.times.size
    return out.times, P.reshape(out.density, (b, m, u))


def trajectory_from_densities(
    z: Node,
    mu: ArrayLike,
    sigma: ArrayLike,
    support: FloatArray,
    density: Node,
    eta: ArrayLike,
    points: Tensor,
) -> TrajectoryGraph:
    """在给定时间点上计算 α 与 ξ_z

    Args:
        z: (B, m, d_z) 采样嵌入
        mu: (B, d_z)
        sigma: (B, d_z)
        support: (u,) 密度支撑时间
        density: (B, m, u) 每个嵌入的离散密度
        eta: 平滑参数
        points: (k,) 共享时间点，或 (B, k) 每个输入各自的时间点
    """
    beta = smoothing_weights(points, support, eta)
    smoothed = P.swap_last(density @ P.swap_last(beta))
    log_prior = log_prior_graph(z, mu, sigma)
    shift = np.max(log_prior.value, axis=-1, keepdims=True)
    prior = P.exp(log_prior - constant(shift))
    b, m = prior.shape
    alpha = normalise_weights(smoothed * P.reshape(prior, (b, 1, m)))
    return TrajectoryGraph(alpha, alpha @ z)


def embedding_trajectory(
    z: Tensor,
    mu: Tensor,
    sigma: Tensor,
    background: Tensor,
    times: FloatArray,
    events: IntArray,
    tau: float,
    eta: float,
    grid: TimeGrid,
) -> tuple[FloatArray, FloatArray]:
    """单个输入的嵌入轨迹

    Returns:
        (α (v, m), ξ_z (v, d_z))
    """
    z_arr = as_tensor(z)
    if z_arr.ndim != 2:
        raise ShapeError("embedding_trajectory", z_arr.shape)
    z_node = constant(z_arr[None, :, :])
    mu_arr = as_tensor(mu).reshape(1, -1)
    sigma_arr = as_tensor(sigma).reshape(1, -1)
    support, density = embedding_densities(z_node, background, times, events, tau)
    graph = trajectory_from_densities(
        z_node, mu_arr, sigma_arr, support, density, eta, grid.points
    )
    return graph.alpha.value[0], graph.latent.value[0]


def feature_trajectory(
    grid: TimeGrid,
    alpha: FloatArray,
    latent: FloatArray,
    decode: Callable[[Tensor], Tensor],
) -> Trajectory:
    """把嵌入轨迹解码为特征轨迹；decode 负责反标准化"""
    features = np.asarray(decode(latent), dtype=np.float64)
    return Trajectory(grid, np.asarray(latent), features, np.asarray(alpha))
