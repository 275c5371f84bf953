"""基于已训练模型的推理：生存函数、期望时间与轨迹"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.autodiff.engine import Tensor
from src.model.store import TrainedModel
from src.model.trajectory import TimeGrid, Trajectory, embedding_trajectory, feature_trajectory
from src.model.vae import sample_embeddings
from src.survival.graph import beran_graph
from src.survival.sampling import gumbel_sample_times
from src.survival.types import FloatArray, StepSurvivalFunction

CHUNK_SIZE = 256


@dataclass
class Prediction:
    """批量预测结果（数据集时间单位）

    Attributes:
        times: (u,) 生存函数支撑时间
        survival: (n, u) 每行的生存函数值
        expected_time: (n,) 期望事件时间 T̂
        sampled_time: (n,) Gumbel 采样时间 T_gen
    """

    times: FloatArray
    survival: FloatArray
    expected_time: FloatArray
    sampled_time: FloatArray

    def survival_function(self, row: int) -> StepSurvivalFunction:
        return StepSurvivalFunction(self.times, self.survival[row])


def standardize(model: TrainedModel, features: FloatArray) -> FloatArray:
    return model.scaler.transform(np.atleast_2d(features))


def encode_rows(model: TrainedModel, features_std: FloatArray) -> tuple[FloatArray, FloatArray]:
    """(μ, σ) 数组"""
    mu, sigma = model.vae.encode(np.atleast_2d(features_std))
    return mu.value, sigma.value


def beran_arrays(
    model: TrainedModel, embeddings: FloatArray
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """分块计算 Beran 1：返回 (支撑时间, S, 密度, 期望时间)，时间为内部单位"""
    queries = np.atleast_2d(embeddings)
    survival, density, expected = [], [], []
    times = np.unique(model.background_times)
    for start in range(0, queries.shape[0], CHUNK_SIZE):
        out = beran_graph(
            queries[start : start + CHUNK_SIZE],
            model.background,
            model.background_times,
            model.background_events,
            model.tau,
        )
        times = out.times
        survival.append(out.survival.value)
        density.append(out.density.value)
        expected.append(out.expected_time.value)
    if not survival:
        empty = np.zeros((0, times.size))
        return times, empty, empty, np.zeros(0)
    return times, np.vstack(survival), np.vstack(density), np.concatenate(expected)


def predict(model: TrainedModel, features: FloatArray, rng: np.random.Generator) -> Prediction:
    """预测每行的生存函数、期望时间和一个采样时间"""
    mu, _ = encode_rows(model, standardize(model, features))
    times, survival, density, expected = beran_arrays(model, mu)
    sampled = gumbel_sample_times(times, density, rng) if len(mu) else np.zeros(0)
    return Prediction(
        model.to_time(times),
        survival,
        model.to_time(expected),
        model.to_time(sampled),
    )


def latent_trajectory(
    model: TrainedModel, features_std: Tensor, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    """单个标准化输入的 (α, ξ_z)，网格为内部时间单位"""
    mu, sigma = model.vae.encode(np.atleast_2d(features_std))
    z = sample_embeddings(mu.value, sigma.value, model.n_embeddings, rng).value[0]
    return embedding_trajectory(
        z,
        mu.value[0],
        sigma.value[0],
        model.background,
        model.background_times,
        model.background_events,
        model.tau,
        model.eta,
        model.grid,
    )


def decode_features(model: TrainedModel, latent: FloatArray) -> FloatArray:
    """解码并反标准化"""
    return model.scaler.inverse(model.vae.decode(np.atleast_2d(latent)).value)


def trajectory_for(
    model: TrainedModel, features: FloatArray, rng: np.random.Generator
) -> Trajectory:
    """原始特征输入的特征轨迹，网格为数据集时间单位"""
    alpha, latent = latent_trajectory(model, standardize(model, features), rng)
    grid = TimeGrid(model.to_time(model.grid.points))
    return feature_trajectory(grid, alpha, latent, lambda z: decode_features(model, z))
