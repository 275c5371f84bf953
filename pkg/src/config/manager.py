"""配置文件管理模块"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

Activation = Literal["tanh", "softplus"]


class LossWeights(BaseModel):
    """损失函数各部分的权重"""

    gamma1: float = Field(default=0.5, ge=0.0, description="L_Beran 权重")
    gamma2: float = Field(default=2.0, ge=0.0, description="重构误差权重")
    gamma3: float = Field(default=1.0, ge=0.0, description="L_Tr1 权重")
    gamma4: float = Field(default=0.05, ge=0.0, description="L_Tr2 权重")
    mmd_lambda: float = Field(default=40.0, ge=0.0, description="MMD 正则系数 λ")


class ModelConfig(BaseModel):
    """编码器/解码器结构配置"""

    latent_dim: int = Field(default=8, ge=1, description="嵌入维度 d_z")
    hidden_sizes: list[int] = Field(default_factory=lambda: [64, 64], description="隐藏层宽度")
    activation: Activation = Field(default="tanh", description="隐藏层激活函数")
    sigma_floor: float = Field(default=1e-6, gt=0.0, description="σ 的正下界")
    init_tau: float = Field(default=1.0, gt=0.0, description="核温度 τ 初值")
    init_eta: float = Field(default=1.0, description="平滑参数 η 初值")

    @field_validator("hidden_sizes")
    @classmethod
    def _check_hidden(cls, value: list[int]) -> list[int]:
        if any(size < 1 for size in value):
            raise ValueError("hidden layer sizes must be positive")
        return value


class TrainConfig(BaseModel):
    """训练过程配置"""

    background_size: int = Field(default=100, ge=1, description="每个任务的背景集大小 r")
    tasks_per_epoch: Optional[int] = Field(
        default=None, ge=1, description="每个 epoch 的任务数 M（None 表示 ceil(n / batch_size)）"
    )
    batch_size: int = Field(default=64, ge=1, description="每个任务处理的输入实例数")
    n_embeddings: int = Field(default=48, ge=1, description="每个输入生成的嵌入数 m")
    grid_size: int = Field(default=64, ge=1, description="轨迹时间网格点数 v")
    epochs: int = Field(default=200, ge=0, description="训练轮数")
    warmup_epochs: int = Field(default=100, ge=0, description="切换到全量背景前的轮数")
    learning_rate: float = Field(default=1e-3, ge=0.0, description="Adam 学习率")
    seed: int = Field(default=0, description="随机种子")
    holdout_fraction: float = Field(
        default=0.0, ge=0.0, lt=1.0, description="训练日志中 hold-out C-index 的保留比例"
    )


class ClassifierConfig(BaseModel):
    """删失指示分类器配置"""

    hidden_units: int = Field(default=32, ge=1, description="隐藏层单元数")
    epochs: int = Field(default=300, ge=0, description="全批量训练轮数")
    learning_rate: float = Field(default=1e-2, ge=0.0, description="Adam 学习率")
    balance_classes: bool = Field(default=True, description="是否按类别先验倒数加权")


class EvalConfig(BaseModel):
    """评估配置"""

    reps: int = Field(default=20, ge=1, description="交叉验证重复次数")
    train_fraction: float = Field(default=0.75, gt=0.0, lt=1.0, description="训练集比例")
    beran_taus: list[float] = Field(
        default_factory=lambda: [
            1e-3, 1e-2, 1e-1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0, 200.0, 500.0, 700.0, 1000.0
        ],
        description="Beran 基线的 τ 候选值",
    )


class SurvGenConfig(BaseModel):
    """survgen 完整配置"""

    loss: LossWeights = Field(default_factory=LossWeights)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)


class ConfigManager:
    """配置文件管理器"""

    def __init__(self, config_path: Optional[Path] = None) -> None:
        """初始化配置管理器

        Args:
            config_path: 配置文件路径，None 表示只使用默认值
        """
        self._config_path = config_path

    def get_config_path(self) -> Optional[Path]:
        """获取配置文件路径"""
        return self._config_path

    def load(self) -> SurvGenConfig:
        """加载配置，文件不存在时返回默认配置

        Returns:
            SurvGenConfig: 配置对象

        Raises:
            ValueError: 配置文件格式错误或验证失败
            OSError: 文件读取错误
        """
        config_path = self._config_path
        if config_path is None or not config_path.exists():
            return SurvGenConfig()

        try:
            with open(config_path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"配置文件格式错误: {config_path} - {e}") from e
        except OSError as e:
            raise OSError(f"无法读取配置文件: {config_path} - {e}") from e

        try:
            return SurvGenConfig.model_validate(data)
        except ValidationError as e:
            raise ValueError(f"配置文件验证失败: {config_path} - {e}") from e

    def save(self, config: SurvGenConfig) -> None:
        """保存配置到文件

        Args:
            config: 配置对象

        Raises:
            OSError: 文件写入错误或未指定路径
        """
        config_path = self._config_path
        if config_path is None:
            raise OSError("未指定配置文件路径")
        try:
            config_path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OSError(f"无法创建配置目录: {config_path.parent} - {e}") from e

        try:
            with open(config_path, "w", encoding="utf-8") as f:
                f.write(config.model_dump_json(indent=2))
        except OSError as e:
            raise OSError(f"无法写入配置文件: {config_path} - {e}") from e
