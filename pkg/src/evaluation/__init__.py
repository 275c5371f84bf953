"""评估：交叉验证 C-index 与生成数据保真度"""

from src.evaluation.crossval import (
    beran_baseline_predict,
    cross_validate,
    select_baseline_tau,
    split_indices,
)
from src.evaluation.fidelity import compare_km, km_fidelity

__all__ = [
    "beran_baseline_predict",
    "compare_km",
    "cross_validate",
    "km_fidelity",
    "select_baseline_tau",
    "split_indices",
]
