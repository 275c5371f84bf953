"""核心结果类型定义 - 所有写入文件的结构化结果"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class EpochRecord(BaseModel):
    """训练日志中每个 epoch 的一行"""

    model_config = ConfigDict(populate_by_name=True)

    epoch: int = Field(..., ge=1, description="epoch 序号（从 1 开始）")
    beran: float = Field(..., alias="L_Beran", description="L_Beran 均值")
    wae: float = Field(..., alias="L_WAE", description="L_WAE 均值")
    tr1: float = Field(..., alias="L_Tr1", description="L_Tr1 均值")
    tr2: float = Field(..., alias="L_Tr2", description="L_Tr2 均值")
    total: float = Field(..., description="总损失均值")
    holdout_c_index: Optional[float] = Field(default=None, description="hold-out C-index")


class CrossValReport(BaseModel):
    """重复随机划分交叉验证报告"""

    c_index: list[Optional[float]] = Field(..., description="每次重复的 C-index，None 表示未定义")
    mean: Optional[float] = Field(default=None, description="已定义值的均值")
    std: Optional[float] = Field(default=None, description="已定义值的标准差")
    n_undefined: int = Field(default=0, ge=0, description="未定义的重复次数")
    baseline_c_index: Optional[list[Optional[float]]] = Field(
        default=None, description="Beran 基线每次重复的 C-index"
    )
    baseline_mean: Optional[float] = Field(default=None, description="Beran 基线均值")
    baseline_std: Optional[float] = Field(default=None, description="Beran 基线标准差")
    baseline_taus: Optional[list[float]] = Field(default=None, description="每次重复选中的 τ")
    config: dict[str, object] = Field(default_factory=dict, description="配置快照")


class KMComparison(BaseModel):
    """原始数据与生成数据的 Kaplan-Meier 曲线比较"""

    max_deviation: float = Field(..., ge=0.0, le=1.0, description="两条 KM 曲线的最大绝对差")
    censoring_rate_original: float = Field(..., description="原始数据删失率")
    censoring_rate_generated: float = Field(..., description="生成数据删失率")
    n_original: int = Field(..., ge=1, description="原始数据行数")
    n_generated: int = Field(..., ge=1, description="生成数据行数")
