"""生存数据类型定义"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np
import numpy.typing as npt

from src.errors import ContractError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


@dataclass(frozen=True)
class SurvivalRecord:
    """单条生存记录 (x, T, δ)"""

    x: FloatArray
    time: float
    event: int


@dataclass
class SurvivalDataset:
    """右删失生存数据集

    Attributes:
        features: (n, d) 特征矩阵（分类特征已 one-hot 编码）
        times: (n,) 事件/删失时间，非负
        events: (n,) 删失指示，1 表示观察到事件
        columns: 编码后的特征列名
        kinds: 每列 "continuous" 或 "categorical"（one-hot 列）
    """

    features: FloatArray
    times: FloatArray
    events: IntArray
    columns: list[str] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        self.events = np.asarray(self.events).astype(np.int64).reshape(-1)
        n = self.times.shape[0]
        features = np.asarray(self.features, dtype=np.float64)
        if n == 0:
            features = features.reshape(0, len(self.columns))
        self.features = np.atleast_2d(features)
        if self.features.shape[0] != n or self.events.shape[0] != n:
            raise ContractError(
                f"inconsistent dataset lengths: features {self.features.shape[0]}, "
                f"times {n}, events {self.events.shape[0]}"
            )
        if np.any(self.times < 0) or not np.all(np.isfinite(self.times)):
            raise ContractError("event times must be finite and nonnegative")
        if not np.all(np.isin(self.events, (0, 1))):
            raise ContractError("event flags must be 0 or 1")
        if not np.all(np.isfinite(self.features)):
            raise ContractError("features must be finite")
        if not self.columns:
            self.columns = [f"x{i + 1}" for i in range(self.features.shape[1])]
        elif len(self.columns) != self.features.shape[1]:
            raise ContractError(
                f"{len(self.columns)} column names for {self.features.shape[1]} features"
            )
        if not self.kinds:
            self.kinds = ["continuous"] * self.features.shape[1]
        elif len(self.kinds) != self.features.shape[1]:
            raise ContractError(
                f"{len(self.kinds)} feature kinds for {self.features.shape[1]} features"
            )

    def __len__(self) -> int:
        return int(self.times.shape[0])

    def __iter__(self) -> Iterator[SurvivalRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def record(self, i: int) -> SurvivalRecord:
        return SurvivalRecord(self.features[i].copy(), float(self.times[i]), int(self.events[i]))

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def censoring_rate(self) -> float:
        """δ = 0 的比例"""
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.events == 0))

    def sorted_index(self) -> IntArray:
        """按时间升序的排列；同一时间下事件先于删失"""
        return sorted_order(self.times, self.events)

    def subset(self, index: Union[Sequence[int], IntArray]) -> SurvivalDataset:
        idx = np.asarray(index, dtype=np.int64)
        return SurvivalDataset(
            self.features[idx],
            self.times[idx],
            self.events[idx],
            list(self.columns),
            list(self.kinds),
        )

    def with_features(self, features: FloatArray) -> SurvivalDataset:
        """替换特征矩阵，保留时间和删失指示"""
        return SurvivalDataset(
            features, self.times.copy(), self.events.copy(), list(self.columns), list(self.kinds)
        )


def sorted_order(times: FloatArray, events: IntArray) -> IntArray:
    """时间升序、同时间事件优先的稳定排列"""
    return np.lexsort((-np.asarray(events), np.asarray(times))).astype(np.int64)


@dataclass(frozen=True)
class StepSurvivalFunction:
    """阶梯生存函数

    times 严格递增，values[j] 为 [t_j, t_{j+1}) 上的 S 值；隐含 t_0 = 0, S_0 = 1。
    """

    times: FloatArray
    values: FloatArray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.shape != values.shape or times.ndim != 1:
            raise ContractError("survival function needs matching 1-D times and values")
        if times.size and np.any(np.diff(times) <= 0):
            raise ContractError("survival function times must be strictly increasing")
        if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
            raise ContractError("survival values must lie in [0, 1]")
        if values.size and np.any(np.diff(np.concatenate(([1.0], values))) > 1e-12):
            raise ContractError("survival values must be non-increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", np.clip(values, 0.0, 1.0))

    def __len__(self) -> int:
        return int(self.times.size)

    def __call__(self, t: Union[float, FloatArray]) -> FloatArray:
        """右连续求值 S(t)"""
        points = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.times, points, side="right") - 1
        padded = np.concatenate(([1.0], self.values))
        return np.asarray(padded[idx + 1])


@dataclass(frozen=True)
class DiscreteEventDistribution:
    """离散事件时间分布：p_j = S_{j-1} - S_j，剩余质量 p_∞ = S_n"""

    times: FloatArray
    masses: FloatArray
    residual: float

    def __post_init__(self) -> None:
        masses = np.asarray(self.masses, dtype=np.float64)
        if np.any(masses < -1e-12) or self.residual < -1e-12:
            raise ContractError("event masses must be nonnegative")
        total = float(np.sum(masses)) + self.residual
        if abs(total - 1.0) > 1e-9:
            raise ContractError(f"event masses sum to {total}, expected 1")
        object.__setattr__(self, "masses", np.clip(masses, 0.0, None))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.float64))

    def mass_at(self, t: float) -> float:
        hit = np.flatnonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12))
        return float(self.masses[hit[0]]) if hit.size else 0.0

    def survival(self) -> StepSurvivalFunction:
        """由质量重建生存函数 S_k = 1 - Σ_{j≤k} p_j"""
        return StepSurvivalFunction(self.times, 1.0 - np.cumsum(self.masses))
