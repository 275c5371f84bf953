"""Adam 优化器"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from src.autodiff.engine import GradientMap, Node, Tensor


class Adam:
    """自适应矩估计优化器，原地更新参数节点的值"""

    def __init__(
        self,
        params: Sequence[Node],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self._m: list[Tensor] = [np.zeros_like(p.value) for p in self.params]
        self._v: list[Tensor] = [np.zeros_like(p.value) for p in self.params]

    def step(self, grads: GradientMap) -> None:
        """执行一步更新；不在 grads 中的参数视为零梯度"""
        self.steps += 1
        if self.lr == 0.0:
            return
        bias1 = 1.0 - self.beta1**self.steps
        bias2 = 1.0 - self.beta2**self.steps
        for i, param in enumerate(self.params):
            grad = grads.get(param)
            if grad is None:
                grad = np.zeros_like(param.value)
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * grad
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * grad * grad
            m_hat = self._m[i] / bias1
            v_hat = self._v[i] / bias2
            param.value = param.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            param.grad = np.zeros_like(param.value)

    def state_dict(self) -> dict[str, object]:
        return {"steps": self.steps, "lr": self.lr}
