"""生成新的生存三元组 (x̂, T_gen, δ_gen)

T_gen 由 Beran 离散密度经 Gumbel-max 采样得到；x̂ 取特征轨迹在最近网格点上的值；
δ_gen 由删失分类器在 (x̂, T_gen) 上的概率做 Bernoulli 抽样。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import ContractError
from src.generation.censor import predict_censor_indicator
from src.model.inference import (
    beran_arrays,
    encode_rows,
    latent_trajectory,
    standardize,
)
from src.model.store import TrainedModel
from src.survival.sampling import gumbel_sample_times, spawn_generators
from src.survival.types import FloatArray, SurvivalDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratedTriplet:
    """一个生成实例（数据集单位）"""

    features: FloatArray
    time: float
    event: int


def generate_time(features: FloatArray, model: TrainedModel, rng: np.random.Generator) -> float:
    """对单个原始输入采样 T_gen（数据集单位）"""
    mu, _ = encode_rows(model, standardize(model, features))
    times, _, density, _ = beran_arrays(model, mu)
    return float(model.to_time(gumbel_sample_times(times, density, rng))[0])


def generate_instance(
    features: FloatArray, model: TrainedModel, rng: np.random.Generator
) -> GeneratedTriplet:
    """生成单个三元组

    Raises:
        ContractError: 模型没有删失分类器
    """
    if model.classifier is None:
        raise ContractError("model has no censoring classifier")
    x_std = standardize(model, features)
    mu, _ = encode_rows(model, x_std)
    times, _, density, _ = beran_arrays(model, mu)
    t_gen = float(gumbel_sample_times(times, density, rng)[0])

    _, latent = latent_trajectory(model, x_std, rng)
    k = int(model.grid.nearest(t_gen))
    x_hat_std = model.vae.decode(latent[k : k + 1]).value
    x_hat = model.scaler.inverse(x_hat_std)[0]
    t_out = float(model.to_time(np.array([t_gen]))[0])
    event = predict_censor_indicator(x_hat_std, t_out, model.classifier, rng)
    return GeneratedTriplet(x_hat, t_out, event)


def generate_dataset(
    model: TrainedModel, features: FloatArray, rng: np.random.Generator
) -> SurvivalDataset:
    """对每一行原始输入生成一个三元组，组成新的数据集

    每行使用独立派生的随机流，结果与行的处理顺序无关。
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    columns = model.schema.encoded_columns()
    kinds = model.schema.encoded_kinds()
    if x.shape[0] == 0:
        return SurvivalDataset(np.zeros((0, x.shape[1])), np.zeros(0), np.zeros(0), columns, kinds)
    triplets = [
        generate_instance(row, model, stream)
        for row, stream in zip(x, spawn_generators(rng, x.shape[0]))
    ]
    logger.info("generated %d instances", len(triplets))
    return SurvivalDataset(
        np.vstack([tr.features for tr in triplets]),
        np.array([tr.time for tr in triplets]),
        np.array([tr.event for tr in triplets], dtype=np.int64),
        columns,
        kinds,
    )
