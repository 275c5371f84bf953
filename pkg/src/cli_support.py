"""CLI 辅助：异常到退出码的映射与修复建议

退出码：0 成功，1 用法错误，2 数据/配置错误，3 数值失败。
"""

from __future__ import annotations

import importlib
import re
from typing import Any, List, Optional

import typer

from src.errors import ContractError, DataError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

# 较新的 typer 自带 click 副本；异常类取自 typer 实际使用的模块
_click_exceptions: Any = importlib.import_module(typer.BadParameter.__module__)
ClickException = _click_exceptions.ClickException
UsageError = _click_exceptions.UsageError
ClickExit = _click_exceptions.Exit
ClickAbort = _click_exceptions.Abort


def exit_code_for(error: BaseException) -> int:
    """按异常类型给出退出码"""
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (DataError, ContractError, OSError)):
        return EXIT_DATA
    if isinstance(error, ValueError) and not isinstance(error, UsageError):
        return EXIT_DATA
    return EXIT_USAGE


class ErrorHelper:
    """错误提示助手

    根据异常类型与消息生成针对性的修复建议。
    """

    def suggest_fix(self, error: BaseException) -> Optional[str]:
        """根据异常生成建议

        Args:
            error: 捕获的异常

        Returns:
            建议文本；无法给出建议时返回 None
        """
        message = str(error).lower()
        suggestions: List[str] = []

        # 数值失败
        if isinstance(error, NumericalError):
            suggestions = self._suggest_numerical(error.where)

        elif isinstance(error, DataError) and error.column is not None:
            suggestions = self._suggest_column_problem(error.column, error.row, message)

        elif self._is_file_not_found(message) or isinstance(error, FileNotFoundError):
            suggestions = self._suggest_file_not_found()

        elif "permission denied" in message:
            suggestions = self._suggest_permission_denied()

        elif "配置文件" in str(error) or "validation" in message:
            suggestions = self._suggest_config_invalid()

        elif self._is_too_small(message):
            suggestions = self._suggest_too_small()

        return "\n".join(suggestions) if suggestions else None

    @staticmethod
    def _suggest_numerical(where: str) -> List[str]:
        """数值失败的建议"""
        return [
            f"计算 '{where}' 时出现 NaN/Inf，尝试以下方法：",
            "  1. 在配置中降低 train.learning_rate",
            "  2. 增大 model.init_tau，避免核权重过于尖锐",
            "  3. 检查数据中是否有极端的时间或特征值",
        ]

    @staticmethod
    def _suggest_column_problem(column: str, row: Optional[int], message: str) -> List[str]:
        """列级数据错误的建议"""
        location = f"第 {row} 行（从 0 开始）" if row is not None else "该列"
        suggestions = [f"列 '{column}' 有问题，请检查{location}："]
        if "constant" in message:
            suggestions.append("  常数列无法标准化，从 schema 中删除它或改为分类特征")
        elif "missing" in message:
            suggestions.append("  CSV 中缺少该列，核对 schema 的列名与 CSV 表头")
        else:
            suggestions.append("  时间需为非负数，事件需为 0 或 1，连续特征需为数值")
        return suggestions

    @staticmethod
    def _is_file_not_found(message: str) -> bool:
        return (
            "no such file" in message
            or "not found" in message
            or "does not exist" in message
            or "cannot read" in message
        )

    @staticmethod
    def _suggest_file_not_found() -> List[str]:
        """文件不存在的建议"""
        return [
            "文件不存在或无法读取：",
            "  1. 检查路径是否正确（相对路径以当前目录为基准）",
            "  2. 内置 schema 可直接用名称：--schema veteran",
        ]

    @staticmethod
    def _suggest_permission_denied() -> List[str]:
        return [
            "权限不足：",
            "  检查输出目录是否可写，或换一个 --out 路径",
        ]

    @staticmethod
    def _suggest_config_invalid() -> List[str]:
        """配置验证失败的建议"""
        return [
            "配置文件无效：",
            "  1. 确认文件为合法 JSON",
            "  2. 字段名需与 loss / model / train / classifier / eval 分组一致",
        ]

    @staticmethod
    def _is_too_small(message: str) -> bool:
        return bool(re.search(r"at least \d+|needs a nonempty|cannot split", message))

    @staticmethod
    def _suggest_too_small() -> List[str]:
        return [
            "数据量不足：",
            "  训练至少需要 2 行，交叉验证每次划分后两侧都需要数据",
        ]
