"""全连接层与多层感知机"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import ArrayLike, Node, Tensor, as_node, parameter
from src.errors import ContractError, ShapeError

Activation = Literal["tanh", "softplus"]


@dataclass
class Linear:
    """y = x W + b"""

    weight: Node
    bias: Node

    @classmethod
    def create(
        cls,
        n_in: int,
        n_out: int,
        rng: np.random.Generator,
        zero: bool = False,
        name: str = "",
    ) -> Linear:
        """Xavier 均匀初始化；zero=True 时权重与偏置全为 0"""
        if zero:
            weight = np.zeros((n_in, n_out))
        else:
            limit = np.sqrt(6.0 / (n_in + n_out))
            weight = rng.uniform(-limit, limit, size=(n_in, n_out))
        return cls(parameter(weight, f"{name}.weight"), parameter(np.zeros(n_out), f"{name}.bias"))

    @property
    def n_in(self) -> int:
        return self.weight.shape[0]

    @property
    def n_out(self) -> int:
        return self.weight.shape[1]

    def __call__(self, x: ArrayLike) -> Node:
        node = as_node(x)
        if node.shape[-1] != self.n_in:
            raise ShapeError("linear", node.shape, self.weight.shape)
        return node @ self.weight + self.bias

    def parameters(self) -> list[Node]:
        return [self.weight, self.bias]


class MLP:
    """隐藏层使用平滑激活、输出层线性的前馈网络"""

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: Activation = "tanh",
        zero_last: bool = False,
        name: str = "mlp",
    ) -> None:
        if len(sizes) < 2:
            raise ContractError(f"MLP needs at least input and output sizes, got {list(sizes)}")
        self.sizes = list(sizes)
        self.activation = activation
        last = len(sizes) - 2
        self.layers = [
            Linear.create(
                n_in, n_out, rng, zero=zero_last and i == last, name=f"{name}.{i}"
            )
            for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:]))
        ]

    def _activate(self, x: Node) -> Node:
        if self.activation == "softplus":
            return P.softplus(x)
        return P.tanh(x)

    def __call__(self, x: ArrayLike, final_activation: bool = False) -> Node:
        h = as_node(x)
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < len(self.layers) - 1 or final_activation:
                h = self._activate(h)
        return h

    def parameters(self) -> list[Node]:
        return [p for layer in self.layers for p in layer.parameters()]

    def state(self) -> dict[str, Tensor]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def load_state(self, state: dict[str, Tensor]) -> None:
        """按参数名回填权重

        Raises:
            ContractError: 缺少参数或形状不一致
        """
        for p in self.parameters():
            if p.name not in state:
                raise ContractError(f"missing parameter '{p.name}'")
            value = np.asarray(state[p.name], dtype=np.float64)
            if value.shape != p.value.shape:
                raise ShapeError(f"load {p.name}", value.shape, p.value.shape)
            p.value = value.copy()
