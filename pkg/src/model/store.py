"""训练结果持久化

TrainedModel 汇总推理所需的全部状态；ModelStore 负责单个 JSON 文档的读写。
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from src.config.manager import SurvGenConfig
from src.datasets.io import DataSchema
from src.datasets.scaling import FeatureScaler
from src.errors import DataError
from src.generation.censor import CensorClassifier
from src.model.trajectory import TimeGrid
from src.model.vae import VAE
from src.survival.types import FloatArray, IntArray

FORMAT_VERSION = 1


@dataclass
class TrainedModel:
    """训练完成的模型

    时间在内部统一除以 time_scale；背景嵌入为训练集全部实例的 μ(x)。
    """

    vae: VAE
    config: SurvGenConfig
    schema: DataSchema
    scaler: FeatureScaler
    time_scale: float
    background: FloatArray
    background_times: FloatArray
    background_events: IntArray
    grid: TimeGrid
    classifier: Optional[CensorClassifier] = None

    @property
    def tau(self) -> float:
        return float(np.exp(self.vae.log_tau.value))

    @property
    def eta(self) -> float:
        return float(self.vae.eta.value)

    @property
    def n_embeddings(self) -> int:
        return self.config.train.n_embeddings

    def to_time(self, scaled: FloatArray) -> FloatArray:
        """内部时间换回数据集单位"""
        return np.asarray(scaled, dtype=np.float64) * self.time_scale

    def from_time(self, times: FloatArray) -> FloatArray:
        return np.asarray(times, dtype=np.float64) / self.time_scale


class ModelDocument(BaseModel):
    """模型 JSON 文档结构"""

    format_version: int = Field(default=FORMAT_VERSION, description="文档格式版本")
    config: SurvGenConfig = Field(..., description="训练所用配置")
    data_schema: dict[str, Any] = Field(..., description="数据 schema")
    n_features: int = Field(..., ge=1, description="编码后特征维度")
    scaler: dict[str, Any] = Field(..., description="标准化统计量")
    time_scale: float = Field(..., gt=0.0, description="时间缩放因子")
    parameters: dict[str, Any] = Field(..., description="网络参数（按名称）")
    background: list[list[float]] = Field(..., description="背景嵌入 μ(x)")
    background_times: list[float] = Field(..., description="背景时间（内部单位）")
    background_events: list[int] = Field(..., description="背景删失指示")
    grid: list[float] = Field(..., description="轨迹时间网格（内部单位）")
    classifier: Optional[dict[str, Any]] = Field(default=None, description="删失分类器")


def to_document(model: TrainedModel) -> ModelDocument:
    return ModelDocument(
        config=model.config,
        data_schema=model.schema.to_dict(),
        n_features=model.vae.n_features,
        scaler=model.scaler.to_dict(),
        time_scale=model.time_scale,
        parameters={k: v.tolist() for k, v in model.vae.state().items()},
        background=np.asarray(model.background).tolist(),
        background_times=np.asarray(model.background_times).tolist(),
        background_events=[int(e) for e in model.background_events],
        grid=model.grid.points.tolist(),
        classifier=None if model.classifier is None else model.classifier.to_dict(),
    )


def from_document(doc: ModelDocument) -> TrainedModel:
    vae = VAE(doc.n_features, doc.config.model, np.random.default_rng(0))
    vae.load_state({k: np.asarray(v, dtype=np.float64) for k, v in doc.parameters.items()})
    return TrainedModel(
        vae=vae,
        config=doc.config,
        schema=DataSchema.from_dict(doc.data_schema),
        scaler=FeatureScaler.from_dict(doc.scaler),
        time_scale=doc.time_scale,
        background=np.asarray(doc.background, dtype=np.float64).reshape(
            -1, doc.config.model.latent_dim
        ),
        background_times=np.asarray(doc.background_times, dtype=np.float64),
        background_events=np.asarray(doc.background_events, dtype=np.int64),
        grid=TimeGrid(np.asarray(doc.grid, dtype=np.float64)),
        classifier=None if doc.classifier is None else CensorClassifier.from_dict(doc.classifier),
    )


class ModelStore:
    """模型文件读写"""

    def __init__(self, path: Path) -> None:
        self._path = path

    @property
    def path(self) -> Path:
        return self._path

    def save(self, model: TrainedModel) -> None:
        """写出模型 JSON

        Raises:
            OSError: 文件写入错误
        """
        try:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with open(self._path, "w", encoding="utf-8") as f:
                f.write(to_document(model).model_dump_json())
        except OSError as e:
            raise OSError(f"cannot write model file: {self._path} - {e}") from e

    def load(self) -> TrainedModel:
        """读取模型 JSON

        Raises:
            DataError: 文件不存在、格式错误或验证失败
        """
        try:
            with open(self._path, encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise DataError(f"model file not found: {self._path}") from e
        except json.JSONDecodeError as e:
            raise DataError(f"model file format error: {self._path} - {e}") from e

        try:
            doc = ModelDocument.model_validate(data)
        except ValidationError as e:
            raise DataError(f"model file validation failed: {self._path} - {e}") from e
        return from_document(doc)
