"""配置管理模块"""

from src.config.manager import (
    ClassifierConfig,
    ConfigManager,
    EvalConfig,
    LossWeights,
    ModelConfig,
    SurvGenConfig,
    TrainConfig,
)

__all__ = [
    "ClassifierConfig",
    "ConfigManager",
    "EvalConfig",
    "LossWeights",
    "ModelConfig",
    "SurvGenConfig",
    "TrainConfig",
]
