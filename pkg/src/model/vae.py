"""变分自编码器

编码器给出 (μ(x), σ(x))，重参数化采样嵌入，解码器重构标准化特征；
正则项为逆多二次核 (IMQ) 下的 MMD。
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import ArrayLike, Node, Tensor, as_node, constant, parameter
from src.config.manager import ModelConfig
from src.errors import ContractError, ShapeError
from src.model.layers import Linear, MLP


class VAE:
    """编码器/解码器与可训练的 τ、η

    Args:
        n_features: 标准化特征维度
        config: 结构配置
        rng: 初始化随机数生成器
        zero_heads: 编码器输出层与解码器输出层置零（用于测试）
    """

    def __init__(
        self,
        n_features: int,
        config: ModelConfig,
        rng: np.random.Generator,
        zero_heads: bool = False,
    ) -> None:
        if n_features < 1:
            raise ContractError("VAE needs at least one feature")
        self.n_features = n_features
        self.config = config
        self.latent_dim = config.latent_dim
        hidden = list(config.hidden_sizes)
        trunk_out = hidden[-1] if hidden else n_features
        self.trunk: Optional[MLP] = (
            MLP([n_features, *hidden], rng, config.activation, name="encoder")
            if hidden
            else None
        )
        self.mu_head = Linear.create(trunk_out, self.latent_dim, rng, zero_heads, "mu_head")
        self.sigma_head = Linear.create(trunk_out, self.latent_dim, rng, zero_heads, "sigma_head")
        self.decoder = MLP(
            [self.latent_dim, *reversed(hidden), n_features],
            rng,
            config.activation,
            zero_last=zero_heads,
            name="decoder",
        )
        self.log_tau = parameter(np.log(config.init_tau), "log_tau")
        self.eta = parameter(config.init_eta, "eta")

    # ------------------------------------------------------------
    # 参数
    # ------------------------------------------------------------

    def parameters(self) -> list[Node]:
        params: list[Node] = []
        if self.trunk is not None:
            params.extend(self.trunk.parameters())
        params.extend(self.mu_head.parameters())
        params.extend(self.sigma_head.parameters())
        params.extend(self.decoder.parameters())
        params.extend([self.log_tau, self.eta])
        return params

    def state(self) -> dict[str, Tensor]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def load_state(self, state: dict[str, Tensor]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise ContractError(f"missing parameter '{p.name}'")
            value = np.asarray(state[p.name], dtype=np.float64).reshape(p.value.shape)
            p.value = value.copy()

    @property
    def tau(self) -> Node:
        """τ = exp(s)，始终为正"""
        return P.exp(self.log_tau)

    # ------------------------------------------------------------
    # 前向
    # ------------------------------------------------------------

    def encode(self, x: ArrayLike) -> tuple[Node, Node]:
        """编码 (B, d) 特征为 (μ, σ)，σ = softplus(raw) + floor

        Raises:
            ContractError: 特征维度与训练时不一致
        """
        node = as_node(x)
        if node.value.ndim != 2 or node.shape[1] != self.n_features:
            raise ContractError(
                f"expected features of shape (B, {self.n_features}), got {node.shape}"
            )
        h = self.trunk(node, final_activation=True) if self.trunk is not None else node
        mu = self.mu_head(h)
        sigma = P.softplus(self.sigma_head(h)) + self.config.sigma_floor
        return mu, sigma

    def decode(self, z: ArrayLike) -> Node:
        """解码 (..., d_z) 嵌入为标准化特征"""
        node = as_node(z)
        if node.shape[-1] != self.latent_dim:
            raise ContractError(
                f"expected latent vectors of length {self.latent_dim}, got {node.shape}"
            )
        return self.decoder(node)


def sample_embeddings(
    mu: ArrayLike, sigma: ArrayLike, m: int, rng: np.random.Generator
) -> Node:
    """重参数化采样 z_i = μ + ε_i ⊙ σ

    Args:
        mu: (B, d_z) 均值
        sigma: (B, d_z) 标准差
        m: 每个输入的嵌入数
        rng: 随机数生成器

    Returns:
        (B, m, d_z) 嵌入节点，梯度流向 μ 与 σ
    """
    if m < 1:
        raise ContractError(f"need at least one embedding, got m={m}")
    mu_node, sigma_node = as_node(mu), as_node(sigma)
    if mu_node.shape != sigma_node.shape or mu_node.value.ndim != 2:
        raise ShapeError("sample_embeddings", mu_node.shape, sigma_node.shape)
    b, d = mu_node.shape
    noise = constant(rng.standard_normal((b, m, d)))
    return P.reshape(mu_node, (b, 1, d)) + noise * P.reshape(sigma_node, (b, 1, d))


# ============================================================
# MMD 正则项
# ============================================================


def imq_kernel_matrix(a: ArrayLike, b: ArrayLike, latent_dim: int) -> Node:
    """K(a_l, b_j) = C / (C + ‖a_l - b_j‖²)，C = 2·d_z"""
    left, right = as_node(a), as_node(b)
    if left.shape[-1] != right.shape[-1]:
        raise ShapeError("imq_kernel", left.shape, right.shape)
    n, d = left.shape
    k = right.shape[0]
    c = 2.0 * latent_dim
    dist = P.sq_norm(P.reshape(left, (n, 1, d)) - P.reshape(right, (1, k, d)), axis=-1)
    return c * P.reciprocal(dist + c)


Vector = Union[Tensor, list[float]]


def imq_kernel(a: Vector, b: Vector, latent_dim: int) -> float:
    """两个向量之间的 IMQ 核值"""
    left = np.asarray(a, dtype=np.float64).reshape(1, -1)
    right = np.asarray(b, dtype=np.float64).reshape(1, -1)
    return imq_kernel_matrix(left, right, latent_dim).item()


def mmd_penalty(z_batch: ArrayLike, ref_batch: ArrayLike, lam: float) -> Node:
    """无偏形式的 MMD 惩罚项，可能为负

    Raises:
        ContractError: 批大小不足 2 或两批大小不同
    """
    z, ref = as_node(z_batch), as_node(ref_batch)
    n = z.shape[0]
    if n < 2 or ref.shape[0] != n:
        raise ContractError(
            f"MMD needs two batches of equal size >= 2, got {n} and {ref.shape[0]}"
        )
    latent_dim = z.shape[1]
    off_diagonal = constant(1.0 - np.eye(n))
    k_zz = P.sum_(imq_kernel_matrix(z, z, latent_dim) * off_diagonal)
    k_rr = P.sum_(imq_kernel_matrix(ref, ref, latent_dim) * off_diagonal)
    k_zr = P.sum_(imq_kernel_matrix(z, ref, latent_dim))
    pair_scale = lam / (n * (n - 1))
    return pair_scale * k_zz + pair_scale * k_rr - (2.0 * lam / (n * n)) * k_zr
