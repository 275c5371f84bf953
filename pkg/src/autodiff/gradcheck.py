"""有限差分梯度校验"""

from __future__ import annotations

from typing import Callable

import numpy as np

from src.autodiff.engine import Node, Tensor, as_tensor, backward, parameter

ScalarFn = Callable[[Node], Node]


def numeric_gradient(f: ScalarFn, theta: Tensor, h: float = 1e-5) -> Tensor:
    """中心差分梯度"""
    base = as_tensor(theta)
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = f(parameter(base)).item()
        flat[i] = original - h
        minus = f(parameter(base)).item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def analytic_gradient(f: ScalarFn, theta: Tensor) -> Tensor:
    """反向传播得到的梯度；f 与 θ 无关时返回零"""
    leaf = parameter(theta)
    grads = backward(f(leaf))
    return grads.get(leaf, np.zeros_like(leaf.value))


def grad_check(f: ScalarFn, theta: Tensor, h: float = 1e-5) -> float:
    """比较解析梯度与中心差分

    Args:
        f: 以参数节点为输入、返回标量节点的函数
        theta: 检查点
        h: 差分步长

    Returns:
        max |a - c| / (|a| + |c| + 1e-12)，不会因误差过大而抛出异常
    """
    analytic = analytic_gradient(f, theta)
    central = numeric_gradient(f, theta, h)
    rel = np.abs(analytic - central) / (np.abs(analytic) + np.abs(central) + 1e-12)
    return float(np.max(rel)) if rel.size else 0.0
