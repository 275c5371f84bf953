"""删失指示分类器

输入为标准化特征与标准化时间拼接成的向量，输出 P(δ = 1)。
与 VAE 分开训练：只读取特征、时间和删失指示，不接触 VAE 参数。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from src.autodiff import primitives as P
from src.autodiff.engine import Node, Tensor, backward, constant
from src.autodiff.optim import Adam
from src.config.manager import ClassifierConfig
from src.errors import ContractError
from src.model.layers import MLP
from src.survival.types import FloatArray, IntArray

logger = logging.getLogger(__name__)


@dataclass
class CensorClassifier:
    """单隐层二分类器；单一类别数据时退化为常数概率"""

    n_features: int
    time_mean: float
    time_std: float
    network: Optional[MLP] = None
    constant: Optional[float] = None

    def _inputs(self, features: FloatArray, times: FloatArray) -> Tensor:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        t = (np.asarray(times, dtype=np.float64).reshape(-1, 1) - self.time_mean) / self.time_std
        if x.shape[1] != self.n_features or x.shape[0] != t.shape[0]:
            raise ContractError(
                f"classifier expects ({t.shape[0]}, {self.n_features}) features, got {x.shape}"
            )
        return np.hstack([x, t])

    def logits(self, features: FloatArray, times: FloatArray) -> Node:
        if self.network is None:
            raise ContractError("constant classifier has no logits")
        out = self.network(self._inputs(features, times))
        return P.reshape(out, (out.shape[0],))

    def predict_proba(self, features: FloatArray, times: FloatArray) -> FloatArray:
        """P(δ = 1 | x, T)"""
        if self.constant is not None or self.network is None:
            n = np.atleast_2d(features).shape[0]
            return np.full(n, self.constant if self.constant is not None else 0.5)
        return P.sigmoid(self.logits(features, times)).value

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "n_features": self.n_features,
            "time_mean": self.time_mean,
            "time_std": self.time_std,
            "constant": self.constant,
        }
        if self.network is not None:
            data["hidden_units"] = self.network.sizes[1]
            data["weights"] = {k: v.tolist() for k, v in self.network.state().items()}
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CensorClassifier:
        network = None
        if "weights" in data:
            sizes = [int(data["n_features"]) + 1, int(data["hidden_units"]), 1]
            network = MLP(sizes, np.random.default_rng(0), "tanh", name="censor")
            network.load_state({k: np.asarray(v) for k, v in data["weights"].items()})
        return cls(
            int(data["n_features"]),
            float(data["time_mean"]),
            float(data["time_std"]),
            network,
            data.get("constant"),
        )


def class_weights(events: IntArray, balance: bool) -> FloatArray:
    """类别先验倒数加权：w = n / (2·n_class)"""
    y = np.asarray(events)
    if not balance:
        return np.ones(y.size)
    n = y.size
    n_pos = max(int(y.sum()), 1)
    n_neg = max(n - int(y.sum()), 1)
    return np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))


def weighted_bce(logits: Node, labels: FloatArray, weights: FloatArray) -> Node:
    """带权二元交叉熵 softplus(s) - y·s"""
    per_row = P.softplus(logits) - logits * constant(labels)
    return P.sum_(per_row * constant(weights)) * (1.0 / float(np.sum(weights)))


def train_censor_classifier(
    features: FloatArray,
    times: FloatArray,
    events: IntArray,
    config: ClassifierConfig,
    rng: np.random.Generator,
) -> CensorClassifier:
    """全批量 Adam 训练删失指示分类器

    Args:
        features: (n, d) 标准化特征
        times: (n,) 事件时间
        events: (n,) 删失指示（标签）
        config: 分类器配置
        rng: 初始化随机数生成器

    Returns:
        CensorClassifier
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    t = np.asarray(times, dtype=np.float64).reshape(-1)
    y = np.asarray(events).astype(np.float64).reshape(-1)
    if x.shape[0] == 0:
        raise ContractError("censor classifier needs training data")
    time_mean = float(t.mean())
    time_std = float(t.std()) or 1.0
    classifier = CensorClassifier(x.shape[1], time_mean, time_std)

    prevalence = float(y.mean())
    if prevalence in (0.0, 1.0):
        logger.warning(
            "censor classifier trained on a single class; using constant probability %.1f",
            prevalence,
        )
        classifier.constant = prevalence
        return classifier

    classifier.network = MLP(
        [x.shape[1] + 1, config.hidden_units, 1], rng, "tanh", name="censor"
    )
    optimizer = Adam(classifier.network.parameters(), lr=config.learning_rate)
    weights = class_weights(events, config.balance_classes)
    loss_value = float("nan")
    for _ in range(config.epochs):
        loss = weighted_bce(classifier.logits(x, t), y, weights)
        optimizer.step(backward(loss))
        loss_value = loss.item()
    logger.info("censor classifier trained for %d epochs, loss %.4f", config.epochs, loss_value)
    if config.balance_classes:
        _restore_prior(classifier.network, prevalence)
    return classifier


def _restore_prior(network: MLP, prevalence: float) -> None:
    """平衡加权学到的是等先验下的 logit；输出偏置加 log(n_1 / n_0) 还原训练集先验"""
    output = network.layers[-1].bias
    output.value = output.value + np.log(prevalence / (1.0 - prevalence))


def predict_censor_indicator(
    x_hat: FloatArray,
    t_gen: float,
    classifier: CensorClassifier,
    rng: np.random.Generator,
) -> int:
    """δ_gen ~ Bernoulli(p̂(δ = 1 | x̂, T_gen))"""
    draws = sample_censor_indicators(np.atleast_2d(x_hat), np.array([t_gen]), classifier, rng)
    return int(draws[0])


def sample_censor_indicators(
    x_hat: FloatArray,
    times: FloatArray,
    classifier: CensorClassifier,
    rng: np.random.Generator,
) -> IntArray:
    """批量 Bernoulli 抽样"""
    prob = classifier.predict_proba(x_hat, times)
    return (rng.uniform(size=prob.shape) < prob).astype(np.int64)
