"""自动微分原语

每个原语计算前向值并登记反向规则。二元逐元素原语遵循 numpy 广播，
反向时把梯度按原形状求和还原（unbroadcast）。
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special

from src.autodiff.engine import ArrayLike, Node, Tensor, as_node, make_node
from src.errors import ContractError, ShapeError

Index = Union[int, slice, "np.ndarray", tuple[Union[int, slice, "np.ndarray", None], ...]]
Axis = Optional[int]


# ============================================================
# 辅助函数
# ============================================================


def unbroadcast(grad: Tensor, shape: tuple[int, ...]) -> Tensor:
    """把广播后的梯度求和还原为输入形状"""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(kind: str, a: Node, b: Node) -> tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError as e:
        raise ShapeError(kind, a.shape, b.shape) from e


def _check_axis(kind: str, node: Node, axis: int) -> int:
    ndim = node.value.ndim
    if not -ndim <= axis < ndim:
        raise ShapeError(kind, node.shape)
    return axis % ndim


# ============================================================
# 逐元素二元运算
# ============================================================


def add(a: ArrayLike, b: ArrayLike) -> Node:
    x, y = as_node(a), as_node(b)
    _broadcast_shape("add", x, y)

    def rule(g: Tensor) -> tuple[Tensor, Tensor]:
        return unbroadcast(g, x.shape), unbroadcast(g, y.shape)

    return make_node("add", x.value + y.value, (x, y), rule)


def sub(a: ArrayLike, b: ArrayLike) -> Node:
    x, y = as_node(a), as_node(b)
    _broadcast_shape("sub", x, y)

    def rule(g: Tensor) -> tuple[Tensor, Tensor]:
        return unbroadcast(g, x.shape), unbroadcast(-g, y.shape)

    return make_node("sub", x.value - y.value, (x, y), rule)


def mul(a: ArrayLike, b: ArrayLike) -> Node:
    x, y = as_node(a), as_node(b)
    _broadcast_shape("mul", x, y)

    def rule(g: Tensor) -> tuple[Tensor, Tensor]:
        return unbroadcast(g * y.value, x.shape), unbroadcast(g * x.value, y.shape)

    return make_node("mul", x.value * y.value, (x, y), rule)


def matmul(a: ArrayLike, b: ArrayLike) -> Node:
    x, y = as_node(a), as_node(b)
    if x.value.ndim < 2 or y.value.ndim < 2 or x.shape[-1] != y.shape[-2]:
        raise ShapeError("matmul", x.shape, y.shape)
    try:
        out = np.matmul(x.value, y.value)
    except ValueError as e:
        raise ShapeError("matmul", x.shape, y.shape) from e

    def rule(g: Tensor) -> tuple[Tensor, Tensor]:
        gx = np.matmul(g, np.swapaxes(y.value, -1, -2))
        gy = np.matmul(np.swapaxes(x.value, -1, -2), g)
        return unbroadcast(gx, x.shape), unbroadcast(gy, y.shape)

    return make_node("matmul", out, (x, y), rule)


# ============================================================
# 逐元素一元运算
# ============================================================


def neg(a: ArrayLike) -> Node:
    x = as_node(a)
    return make_node("neg", -x.value, (x,), lambda g: (-g,))


def exp(a: ArrayLike) -> Node:
    x = as_node(a)
    with np.errstate(over="ignore"):
        out = np.exp(x.value)
    return make_node("exp", out, (x,), lambda g: (g * out,))


def log(a: ArrayLike) -> Node:
    x = as_node(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.value)
    return make_node("log", out, (x,), lambda g: (g / x.value,))


def reciprocal(a: ArrayLike) -> Node:
    x = as_node(a)
    with np.errstate(divide="ignore"):
        out = 1.0 / x.value
    return make_node("reciprocal", out, (x,), lambda g: (-g * out * out,))


def square(a: ArrayLike) -> Node:
    x = as_node(a)
    return make_node("square", x.value * x.value, (x,), lambda g: (2.0 * g * x.value,))


def tanh(a: ArrayLike) -> Node:
    x = as_node(a)
    out = np.tanh(x.value)
    return make_node("tanh", out, (x,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: ArrayLike) -> Node:
    x = as_node(a)
    out = special.expit(x.value)
    return make_node("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def softplus(a: ArrayLike) -> Node:
    x = as_node(a)
    out = np.logaddexp(0.0, x.value)
    return make_node("softplus", out, (x,), lambda g: (g * special.expit(x.value),))


def clamp(a: ArrayLike, lo: Optional[float] = None, hi: Optional[float] = None) -> Node:
    """裁剪到 [lo, hi]；区间外梯度为 0"""
    x = as_node(a)
    lower = -np.inf if lo is None else lo
    upper = np.inf if hi is None else hi
    out = np.clip(x.value, lower, upper)
    inside = (x.value >= lower) & (x.value <= upper)
    return make_node("clamp", out, (x,), lambda g: (g * inside,))


# ============================================================
# 归约与形状变换
# ============================================================


def _expand_reduced(g: Tensor, shape: tuple[int, ...], axis: Axis, keepdims: bool) -> Tensor:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum_(a: ArrayLike, axis: Axis = None, keepdims: bool = False) -> Node:
    x = as_node(a)
    if axis is not None:
        axis = _check_axis("sum", x, axis)
    out = np.sum(x.value, axis=axis, keepdims=keepdims)
    return make_node(
        "sum", np.asarray(out), (x,), lambda g: (_expand_reduced(g, x.shape, axis, keepdims),)
    )


def mean(a: ArrayLike, axis: Axis = None, keepdims: bool = False) -> Node:
    x = as_node(a)
    if axis is not None:
        axis = _check_axis("mean", x, axis)
    count = x.value.size if axis is None else x.shape[axis]
    if count == 0:
        raise ShapeError("mean", x.shape)
    out = np.mean(x.value, axis=axis, keepdims=keepdims)
    return make_node(
        "mean",
        np.asarray(out),
        (x,),
        lambda g: (_expand_reduced(g, x.shape, axis, keepdims) / count,),
    )


def sq_norm(a: ArrayLike, axis: int = -1, keepdims: bool = False) -> Node:
    """沿 axis 的平方 L2 范数"""
    x = as_node(a)
    axis = _check_axis("sq_norm", x, axis)
    out = np.sum(x.value * x.value, axis=axis, keepdims=keepdims)
    return make_node(
        "sq_norm",
        np.asarray(out),
        (x,),
        lambda g: (2.0 * x.value * _expand_reduced(g, x.shape, axis, keepdims),),
    )


def concat(nodes: Sequence[ArrayLike], axis: int = -1) -> Node:
    parts = [as_node(n) for n in nodes]
    if not parts:
        raise ContractError("concat needs at least one input")
    try:
        out = np.concatenate([p.value for p in parts], axis=axis)
    except ValueError as e:
        raise ShapeError("concat", *(p.shape for p in parts)) from e
    ax = axis % out.ndim
    bounds = np.cumsum([p.shape[ax] for p in parts])[:-1]

    def rule(g: Tensor) -> list[Tensor]:
        return list(np.split(g, bounds, axis=ax))

    return make_node("concat", out, tuple(parts), rule)


def broadcast_to(a: ArrayLike, shape: tuple[int, ...]) -> Node:
    x = as_node(a)
    try:
        out = np.broadcast_to(x.value, shape).copy()
    except ValueError as e:
        raise ShapeError("broadcast", x.shape, tuple(shape)) from e
    return make_node("broadcast", out, (x,), lambda g: (unbroadcast(g, x.shape),))


def reshape(a: ArrayLike, shape: tuple[int, ...]) -> Node:
    x = as_node(a)
    try:
        out = np.reshape(x.value, shape)
    except ValueError as e:
        raise ShapeError("reshape", x.shape, tuple(shape)) from e
    return make_node("reshape", out, (x,), lambda g: (np.reshape(g, x.shape),))


def swap_last(a: ArrayLike) -> Node:
    """交换最后两个维度"""
    x = as_node(a)
    if x.value.ndim < 2:
        raise ShapeError("swap_last", x.shape)
    out = np.swapaxes(x.value, -1, -2)
    return make_node("swap_last", out, (x,), lambda g: (np.swapaxes(g, -1, -2),))


def slice_(a: ArrayLike, index: Index) -> Node:
    """基本/花式索引；反向用 np.add.at 累加重复下标"""
    x = as_node(a)
    try:
        out = np.asarray(x.value[index])
    except IndexError as e:
        raise ShapeError("slice", x.shape) from e

    def rule(g: Tensor) -> tuple[Tensor]:
        grad = np.zeros_like(x.value)
        np.add.at(grad, index, g)
        return (grad,)

    return make_node("slice", out.copy(), (x,), rule)


# ============================================================
# softmax / softmin
# ============================================================


def _softmax_value(values: Tensor, axis: int) -> Tensor:
    shifted = values - np.max(values, axis=axis, keepdims=True)
    weights = np.exp(shifted)
    return np.asarray(weights / np.sum(weights, axis=axis, keepdims=True))


def softmax(a: ArrayLike, axis: int = -1) -> Node:
    """数值稳定的 softmax（先减最大值）"""
    x = as_node(a)
    axis = _check_axis("softmax", x, axis)
    out = _softmax_value(x.value, axis)

    def rule(g: Tensor) -> tuple[Tensor]:
        inner = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - inner),)

    return make_node("softmax", out, (x,), rule)


def softmin(a: ArrayLike, axis: int = -1) -> Node:
    """softmin(x) = softmax(-x)"""
    x = as_node(a)
    axis = _check_axis("softmin", x, axis)
    out = _softmax_value(-x.value, axis)

    def rule(g: Tensor) -> tuple[Tensor]:
        inner = np.sum(g * out, axis=axis, keepdims=True)
        return (-out * (g - inner),)

    return make_node("softmin", out, (x,), rule)


# ============================================================
# 累积运算
# ============================================================


def cumsum(a: ArrayLike, axis: int = -1) -> Node:
    x = as_node(a)
    axis = _check_axis("cumsum", x, axis)
    out = np.cumsum(x.value, axis=axis)

    def rule(g: Tensor) -> tuple[Tensor]:
        return (np.flip(np.cumsum(np.flip(g, axis), axis=axis), axis),)

    return make_node("cumsum", out, (x,), rule)


def _cumprod_grad(x: Tensor, out: Tensor, g: Tensor) -> Tensor:
    """二维 (rows, n) 累积乘积的梯度，正确处理零因子"""
    grad = np.zeros_like(x)
    has_zero = np.any(x == 0.0, axis=1)
    clean = ~has_zero
    if np.any(clean):
        tail = np.flip(np.cumsum(np.flip(g[clean] * out[clean], 1), axis=1), 1)
        grad[clean] = tail / x[clean]
    for row in np.flatnonzero(has_zero):
        xr, gr, outr = x[row], g[row], out[row]
        z = int(np.argmax(xr == 0.0))
        if z > 0:
            head = gr[:z] * outr[:z]
            grad[row, :z] = np.flip(np.cumsum(np.flip(head))) / xr[:z]
        before = outr[z - 1] if z > 0 else 1.0
        partial = np.concatenate(([1.0], np.cumprod(xr[z + 1 :])))
        grad[row, z] = before * float(np.sum(gr[z:] * partial))
    return grad


def cumprod(a: ArrayLike, axis: int = -1) -> Node:
    x = as_node(a)
    axis = _check_axis("cumprod", x, axis)
    out = np.cumprod(x.value, axis=axis)

    def rule(g: Tensor) -> tuple[Tensor]:
        moved_x = np.moveaxis(x.value, axis, -1)
        moved_out = np.moveaxis(out, axis, -1)
        moved_g = np.moveaxis(g, axis, -1)
        n = moved_x.shape[-1]
        flat = _cumprod_grad(
            moved_x.reshape(-1, n), moved_out.reshape(-1, n), moved_g.reshape(-1, n)
        )
        return (np.moveaxis(flat.reshape(moved_x.shape), -1, axis),)

    return make_node("cumprod", out, (x,), rule)


# ============================================================
# 原语注册表
# ============================================================

PRIMITIVES: dict[str, Callable[..., Node]] = {
    "add": add,
    "subtract": sub,
    "multiply": mul,
    "matmul": matmul,
    "exp": exp,
    "log": log,
    "negate": neg,
    "reciprocal": reciprocal,
    "square": square,
    "sq_norm": sq_norm,
    "sum": sum_,
    "mean": mean,
    "concat": concat,
    "sigmoid": sigmoid,
    "softplus": softplus,
    "tanh": tanh,
    "softmax": softmax,
    "softmin": softmin,
    "cumsum": cumsum,
    "cumprod": cumprod,
    "broadcast": broadcast_to,
    "reshape": reshape,
    "slice": slice_,
    "clamp": clamp,
}


def apply_primitive(kind: str, *inputs: ArrayLike, **attrs: object) -> Node:
    """按名称应用原语

    Args:
        kind: 原语名称（见 PRIMITIVES）
        inputs: 输入节点或常量
        attrs: 原语属性，如 axis、shape、index

    Raises:
        ContractError: 未知原语
    """
    fn = PRIMITIVES.get(kind)
    if fn is None:
        raise ContractError(f"unknown primitive '{kind}'")
    if kind == "concat":
        return fn(list(inputs), **attrs)
    return fn(*inputs, **attrs)
