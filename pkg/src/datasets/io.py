"""CSV 读写与数据 schema

schema 文件为 JSON（也接受 YAML）：
    {"features": [{"name": ..., "kind": "continuous" | "categorical", "categories": [...]}],
     "time": "time", "event": "event"}
分类特征按 categories 顺序 one-hot 编码为 "name=category" 列。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import pandas as pd
import yaml

from src.errors import DataError
from src.survival.types import FloatArray, SurvivalDataset

logger = logging.getLogger(__name__)

FeatureKind = Literal["continuous", "categorical"]
SCHEMA_DIR = Path(__file__).parent / "schemas"


@dataclass
class FeatureSpec:
    """单个原始特征"""

    name: str
    kind: FeatureKind = "continuous"
    categories: list[str] = field(default_factory=list)

    def encoded_columns(self) -> list[str]:
        if self.kind == "categorical":
            return [f"{self.name}={category}" for category in self.categories]
        return [self.name]


@dataclass
class DataSchema:
    """数据集 schema：特征列表、时间列和事件列"""

    features: list[FeatureSpec]
    time: str = "time"
    event: str = "event"

    @property
    def feature_names(self) -> list[str]:
        return [spec.name for spec in self.features]

    def encoded_columns(self) -> list[str]:
        return [col for spec in self.features for col in spec.encoded_columns()]

    def encoded_kinds(self) -> list[str]:
        return [spec.kind for spec in self.features for _ in spec.encoded_columns()]

    def to_dict(self) -> dict[str, Any]:
        features: list[dict[str, Any]] = []
        for spec in self.features:
            entry: dict[str, Any] = {"name": spec.name, "kind": spec.kind}
            if spec.kind == "categorical":
                entry["categories"] = list(spec.categories)
            features.append(entry)
        return {"features": features, "time": self.time, "event": self.event}

    @classmethod
    def from_dict(cls, data: Any, source: str = "schema") -> DataSchema:
        """从字典构造 schema

        Raises:
            DataError: 结构不合法
        """
        if not isinstance(data, dict) or not isinstance(data.get("features"), list):
            raise DataError(f"{source}: expected a mapping with a 'features' list")
        specs: list[FeatureSpec] = []
        for entry in data["features"]:
            if not isinstance(entry, dict) or "name" not in entry:
                raise DataError(f"{source}: every feature needs a 'name'")
            kind = entry.get("kind", "continuous")
            if kind not in ("continuous", "categorical"):
                raise DataError(f"{source}: unknown feature kind '{kind}'", column=entry["name"])
            categories = [str(c) for c in entry.get("categories", [])]
            if kind == "categorical" and not categories:
                raise DataError(
                    f"{source}: categorical feature needs categories", column=entry["name"]
                )
            specs.append(FeatureSpec(str(entry["name"]), kind, categories))
        return cls(specs, str(data.get("time", "time")), str(data.get("event", "event")))


def load_schema(path: Path) -> DataSchema:
    """读取 schema 文件

    Raises:
        DataError: 文件不存在或格式错误
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise DataError(f"cannot read schema file: {path} - {e}") from e
    except yaml.YAMLError as e:
        raise DataError(f"schema file format error: {path} - {e}") from e
    return DataSchema.from_dict(data, source=str(path))


def builtin_schema(name: str) -> DataSchema:
    """按名称读取随包附带的 schema（veteran、whas500、gbsg2）"""
    path = SCHEMA_DIR / f"{name.lower()}.json"
    if not path.exists():
        available = sorted(p.stem for p in SCHEMA_DIR.glob("*.json"))
        raise DataError(f"unknown built-in schema '{name}', available: {', '.join(available)}")
    return load_schema(path)


def read_frame(path: Path) -> pd.DataFrame:
    """以字符串形式读取 CSV，保留原始单元格以便定位错误"""
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        raise DataError(f"data file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse CSV file: {path} - {e}") from e


def infer_schema(frame: pd.DataFrame, time: str = "time", event: str = "event") -> DataSchema:
    """从数据推断 schema：可解析为数值的列视为连续，其余为分类"""
    specs: list[FeatureSpec] = []
    for column in frame.columns:
        if column in (time, event):
            continue
        numeric = pd.to_numeric(frame[column], errors="coerce")
        if numeric.notna().all():
            specs.append(FeatureSpec(str(column)))
        else:
            categories = sorted(str(v) for v in frame[column].unique())
            specs.append(FeatureSpec(str(column), "categorical", categories))
    return DataSchema(specs, time, event)


def _numeric_column(frame: pd.DataFrame, column: str) -> FloatArray:
    if column not in frame.columns:
        raise DataError("missing column", column=column)
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
    bad = np.flatnonzero(values.isna().to_numpy())
    if bad.size:
        row = int(bad[0])
        raise DataError(
            f"unparsable value '{frame[column].iloc[row]}'", row=row, column=column
        )
    return values.to_numpy(dtype=np.float64)


def encode_frame(frame: pd.DataFrame, schema: DataSchema) -> FloatArray:
    """按 schema 把原始特征列编码为数值矩阵"""
    blocks: list[FloatArray] = []
    for spec in schema.features:
        if spec.kind == "continuous":
            blocks.append(_numeric_column(frame, spec.name)[:, None])
            continue
        if spec.name not in frame.columns:
            raise DataError("missing column", column=spec.name)
        labels = frame[spec.name].astype(str).str.strip().to_numpy()
        lookup = {category: j for j, category in enumerate(spec.categories)}
        onehot = np.zeros((len(labels), len(spec.categories)))
        for row, label in enumerate(labels):
            if label not in lookup:
                raise DataError(f"unknown category '{label}'", row=row, column=spec.name)
            onehot[row, lookup[label]] = 1.0
        blocks.append(onehot)
    if not blocks:
        return np.zeros((len(frame), 0))
    return np.hstack(blocks)


def decode_features(features: FloatArray, schema: DataSchema) -> pd.DataFrame:
    """把编码矩阵还原为原始特征列；one-hot 组取最大值对应的类别"""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    columns: dict[str, Any] = {}
    offset = 0
    for spec in schema.features:
        width = len(spec.encoded_columns())
        block = x[:, offset : offset + width]
        if spec.kind == "categorical":
            columns[spec.name] = [spec.categories[j] for j in np.argmax(block, axis=1)]
        else:
            columns[spec.name] = block[:, 0]
        offset += width
    return pd.DataFrame(columns)


def load_csv(path: Path, schema: Optional[DataSchema] = None) -> SurvivalDataset:
    """读取生存数据 CSV

    Args:
        path: CSV 路径（需要表头，UTF-8，'.' 小数点）
        schema: 数据 schema，None 时按内容推断

    Returns:
        SurvivalDataset: 分类特征已 one-hot 编码

    Raises:
        DataError: 缺列、无法解析的单元格、负时间或非 0/1 事件，附带行列位置
    """
    frame = read_frame(path)
    if schema is None:
        schema = infer_schema(frame)
    times = _numeric_column(frame, schema.time)
    negative = np.flatnonzero(times < 0)
    if negative.size:
        raise DataError("negative event time", row=int(negative[0]), column=schema.time)
    events = _numeric_column(frame, schema.event)
    invalid = np.flatnonzero(~np.isin(events, (0.0, 1.0)))
    if invalid.size:
        row = int(invalid[0])
        raise DataError(
            f"event flag must be 0 or 1, got {frame[schema.event].iloc[row]}",
            row=row,
            column=schema.event,
        )
    features = encode_frame(frame, schema)
    logger.debug(
        "loaded %d rows, %d encoded features from %s", len(frame), features.shape[1], path
    )
    return SurvivalDataset(
        features, times, events.astype(np.int64), schema.encoded_columns(), schema.encoded_kinds()
    )


def dataset_frame(ds: SurvivalDataset, schema: DataSchema) -> pd.DataFrame:
    """数据集转为原始列格式的 DataFrame"""
    if len(ds):
        frame = decode_features(ds.features, schema)
    else:
        frame = pd.DataFrame({name: [] for name in schema.feature_names})
    frame[schema.time] = ds.times
    frame[schema.event] = ds.events.astype(int)
    return frame


def save_csv(ds: SurvivalDataset, path: Path, schema: Optional[DataSchema] = None) -> None:
    """以导入格式写出数据集，可被 load_csv 原样读回"""
    if schema is None:
        schema = DataSchema([FeatureSpec(name) for name in ds.columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(ds, schema).to_csv(path, index=False, lineterminator="\n")
