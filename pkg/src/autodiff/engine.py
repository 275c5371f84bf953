"""反向模式自动微分引擎 - 计算图节点与反向传播

每个训练步骤重新构建计算图（define-by-run）；图实例由单一调用方持有，
不同图实例之间不共享可变状态。
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from src.errors import ContractError, NumericalError

if TYPE_CHECKING:
    from src.autodiff.primitives import Index

Tensor = npt.NDArray[np.float64]
ArrayLike = Union["Node", Tensor, float, int, Sequence[float]]
BackwardRule = Callable[[Tensor], Sequence[Optional[Tensor]]]
GradientMap = dict["Node", Tensor]


def as_tensor(values: Union[Tensor, float, int, Sequence[float]]) -> Tensor:
    """转换为 float64 ndarray（始终复制，避免跨任务别名）"""
    return np.array(values, dtype=np.float64)


class Node:
    """计算图节点

    保存前向值、父节点引用、反向规则以及与前向值同形状的梯度累加器。
    叶子节点没有反向规则；requires_grad 的叶子即为可训练参数。
    """

    __slots__ = ("value", "grad", "parents", "op", "requires_grad", "_backward", "name")

    def __init__(
        self,
        value: Tensor,
        parents: tuple[Node, ...] = (),
        op: str = "leaf",
        requires_grad: bool = False,
        backward: Optional[BackwardRule] = None,
        name: str = "",
    ) -> None:
        self.value = value
        self.grad: Tensor = np.zeros_like(value)
        self.parents = parents
        self.op = op
        self.requires_grad = requires_grad
        self._backward = backward
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.value.shape)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        """标量节点的 Python 浮点值"""
        if self.value.size != 1:
            raise ContractError(f"item() needs a scalar node, got shape {self.shape}")
        return float(self.value.reshape(()))

    def __repr__(self) -> str:
        label = self.name or self.op
        return f"Node({label}, shape={self.shape}, requires_grad={self.requires_grad})"

    # 运算符重载，统一委托给 primitives
    def __add__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.add(self, other)

    def __radd__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.add(other, self)

    def __sub__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.sub(self, other)

    def __rsub__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.sub(other, self)

    def __mul__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.mul(self, other)

    def __rmul__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.mul(other, self)

    def __truediv__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.mul(self, P.reciprocal(other))

    def __rtruediv__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.mul(other, P.reciprocal(self))

    def __neg__(self) -> Node:
        from src.autodiff import primitives as P

        return P.neg(self)

    def __matmul__(self, other: ArrayLike) -> Node:
        from src.autodiff import primitives as P

        return P.matmul(self, other)

    def __getitem__(self, index: Index) -> Node:
        from src.autodiff import primitives as P

        return P.slice_(self, index)


def constant(values: Union[Tensor, float, int, Sequence[float]], name: str = "") -> Node:
    """创建不参与求导的常量叶子"""
    return Node(as_tensor(values), name=name)


def parameter(values: Union[Tensor, float, int, Sequence[float]], name: str = "") -> Node:
    """创建可训练参数叶子"""
    return Node(as_tensor(values), requires_grad=True, name=name)


def as_node(value: ArrayLike) -> Node:
    """把常量包装为节点，已是节点则原样返回"""
    if isinstance(value, Node):
        return value
    return constant(value)


def make_node(
    op: str,
    value: Tensor,
    parents: tuple[Node, ...],
    backward: BackwardRule,
) -> Node:
    """登记一个原语输出节点，前向值必须全部有限"""
    if not np.all(np.isfinite(value)):
        raise NumericalError(op, f"output shape {tuple(value.shape)}")
    requires_grad = any(parent.requires_grad for parent in parents)
    return Node(
        np.asarray(value, dtype=np.float64),
        parents=parents,
        op=op,
        requires_grad=requires_grad,
        backward=backward if requires_grad else None,
    )


def _topological_order(root: Node) -> list[Node]:
    """返回父节点先于子节点的确定性拓扑序（迭代 DFS，避免递归深度限制）"""
    order: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in reversed(node.parents):
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root: Node) -> GradientMap:
    """从标量根节点反向传播

    每次调用前把图中所有梯度累加器清零，因此重复调用得到相同结果。

    Args:
        root: 标量损失节点

    Returns:
        可训练叶子节点 -> dL/dθ 的映射

    Raises:
        ContractError: 根节点不是标量
    """
    if root.value.size != 1:
        raise ContractError(f"backward() needs a scalar root, got shape {root.shape}")

    order = _topological_order(root)
    for node in order:
        node.grad = np.zeros_like(node.value)
    root.grad = np.ones_like(root.value)

    for node in reversed(order):
        rule = node._backward
        if rule is None or not node.requires_grad:
            continue
        parent_grads = rule(node.grad)
        for parent, parent_grad in zip(node.parents, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            parent.grad = parent.grad + np.reshape(parent_grad, parent.value.shape)

    return {node: node.grad for node in order if node.is_leaf and node.requires_grad}


def value_of(node: Union[Node, Tensor]) -> Tensor:
    """取出节点前向值的副本"""
    if isinstance(node, Node):
        return node.value.copy()
    return np.array(node, dtype=np.float64)
