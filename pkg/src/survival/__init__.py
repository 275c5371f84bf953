"""生存分析核心：估计器、指标与采样"""

from src.survival.estimators import (
    beran_sf,
    expected_event_time,
    kaplan_meier,
    kernel_weights,
    km_density,
    sf_to_density,
)
from src.survival.graph import BeranOutput, beran_graph
from src.survival.metrics import c_index_hard
from src.survival.sampling import gumbel_sample_time, gumbel_sample_times
from src.survival.types import (
    DiscreteEventDistribution,
    StepSurvivalFunction,
    SurvivalDataset,
    SurvivalRecord,
)

__all__ = [
    "BeranOutput",
    "DiscreteEventDistribution",
    "StepSurvivalFunction",
    "SurvivalDataset",
    "SurvivalRecord",
    "beran_graph",
    "beran_sf",
    "c_index_hard",
    "expected_event_time",
    "gumbel_sample_time",
    "gumbel_sample_times",
    "kaplan_meier",
    "kernel_weights",
    "km_density",
    "sf_to_density",
]
