"""异常层次定义

所有库内异常都继承 SurvGenError，CLI 根据类型映射退出码。
"""

from __future__ import annotations

from typing import Optional


class SurvGenError(Exception):
    """survgen 所有异常的基类"""


class ContractError(SurvGenError, ValueError):
    """前置条件被违反（空数据集、τ ≤ 0、非标量反向根节点等）"""


class ShapeError(ContractError):
    """张量形状不满足原语的元数/广播规则"""

    def __init__(self, primitive: str, *shapes: tuple[int, ...]) -> None:
        self.primitive = primitive
        self.shapes = shapes
        rendered = ", ".join(str(s) for s in shapes)
        super().__init__(f"shape mismatch in '{primitive}': {rendered}")


class NumericalError(SurvGenError, ArithmeticError):
    """前向计算出现 NaN/Inf，或某个损失分量非有限"""

    def __init__(self, where: str, detail: str = "") -> None:
        self.where = where
        message = f"non-finite value produced by '{where}'"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class DataError(SurvGenError, ValueError):
    """CSV / schema 数据错误，尽量携带行列定位"""

    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ) -> None:
        self.row = row
        self.column = column
        location: list[str] = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
