"""数据集：合成生成器、CSV 读写与标准化"""

from src.datasets.io import (
    DataSchema,
    FeatureSpec,
    builtin_schema,
    decode_features,
    infer_schema,
    load_csv,
    load_schema,
    read_frame,
    save_csv,
)
from src.datasets.scaling import FeatureScaler
from src.datasets.synthetic import (
    SYNTHETIC_KINDS,
    synth_linear,
    synth_two_circles,
    synth_two_parabolas,
)

__all__ = [
    "DataSchema",
    "FeatureScaler",
    "FeatureSpec",
    "SYNTHETIC_KINDS",
    "builtin_schema",
    "decode_features",
    "infer_schema",
    "load_csv",
    "load_schema",
    "read_frame",
    "save_csv",
    "synth_linear",
    "synth_two_circles",
    "synth_two_parabolas",
]
