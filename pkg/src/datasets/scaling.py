"""特征标准化"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from src.errors import DataError, ShapeError
from src.survival.types import FloatArray, SurvivalDataset


@dataclass
class FeatureScaler:
    """连续特征 z-score，分类（one-hot）列原样通过

    统计量只在训练集上拟合，之后用于所有划分。
    """

    mean: FloatArray
    std: FloatArray
    continuous: np.ndarray

    @classmethod
    def fit(
        cls, features: FloatArray, kinds: Sequence[str], columns: Sequence[str] = ()
    ) -> FeatureScaler:
        """拟合均值与标准差

        Args:
            features: (n, d) 训练特征
            kinds: 每列 "continuous" 或 "categorical"
            columns: 列名，仅用于错误信息

        Raises:
            DataError: 连续列为常数
        """
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != len(kinds):
            raise ShapeError("scaler.fit", x.shape, (len(kinds),))
        continuous = np.array([kind == "continuous" for kind in kinds], dtype=bool)
        mean = np.where(continuous, x.mean(axis=0), 0.0) if len(x) else np.zeros(x.shape[1])
        std = np.where(continuous, x.std(axis=0), 1.0) if len(x) else np.ones(x.shape[1])
        for j in np.flatnonzero(continuous & (std <= 0.0)):
            name = columns[j] if j < len(columns) else f"#{j}"
            raise DataError("constant feature cannot be standardized", column=name)
        return cls(mean, std, continuous)

    def transform(self, features: FloatArray) -> FloatArray:
        x = np.asarray(features, dtype=np.float64)
        return np.asarray((x - self.mean) / self.std)

    def inverse(self, features: FloatArray) -> FloatArray:
        x = np.asarray(features, dtype=np.float64)
        return np.asarray(x * self.std + self.mean)

    def standardize(self, ds: SurvivalDataset) -> SurvivalDataset:
        return ds.with_features(self.transform(ds.features))

    def destandardize(self, x_hat: FloatArray) -> FloatArray:
        return self.inverse(x_hat)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "continuous": self.continuous.astype(bool).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FeatureScaler:
        return cls(
            np.asarray(data["mean"], dtype=np.float64),
            np.asarray(data["std"], dtype=np.float64),
            np.asarray(data["continuous"], dtype=bool),
        )
