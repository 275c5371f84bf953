"""删失分类器与数据生成测试"""

from dataclasses import replace

import numpy as np
import pytest

from src.config.manager import ClassifierConfig, ModelConfig, SurvGenConfig, TrainConfig
from src.datasets import synth_linear
from src.errors import ContractError
from src.evaluation.fidelity import km_fidelity
from src.generation.censor import (
    CensorClassifier,
    class_weights,
    sample_censor_indicators,
    train_censor_classifier,
)
from src.generation.generator import generate_dataset, generate_instance
from src.model.store import TrainedModel
from src.survival.types import SurvivalDataset
from src.training import fit
from src.types import EpochRecord


def _separable(n: int = 200, seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """δ 由特征符号决定，两类之间留有间隔"""
    rng = np.random.default_rng(seed)
    sign = rng.choice([-1.0, 1.0], size=n)
    x = np.column_stack([sign * rng.uniform(0.5, 2.0, n), rng.standard_normal(n)])
    times = rng.uniform(1.0, 20.0, n)
    return x, times, (sign > 0).astype(np.int64)


@pytest.fixture(scope="module")
def model() -> TrainedModel:
    config = SurvGenConfig(
        model=ModelConfig(latent_dim=2, hidden_sizes=[6]),
        train=TrainConfig(
            background_size=10,
            batch_size=8,
            n_embeddings=4,
            grid_size=6,
            epochs=1,
            warmup_epochs=1,
            tasks_per_epoch=2,
        ),
        classifier=ClassifierConfig(hidden_units=4, epochs=30),
    )
    return fit(synth_linear(n=15, rng=np.random.default_rng(1)), config, rng=2)


class TestCensorClassifier:
    """删失指示分类器"""

    def test_separable_data(self) -> None:
        x, times, events = _separable()
        config = ClassifierConfig(hidden_units=8, epochs=300, learning_rate=0.05)
        classifier = train_censor_classifier(x, times, events, config, np.random.default_rng(3))
        accuracy = np.mean((classifier.predict_proba(x, times) > 0.5) == (events == 1))
        assert accuracy >= 0.95

    def test_single_class_gives_constant(self) -> None:
        x = np.zeros((5, 2))
        events = np.ones(5, dtype=np.int64)
        rng = np.random.default_rng(0)
        classifier = train_censor_classifier(x, np.arange(5.0), events, ClassifierConfig(), rng)
        assert classifier.constant == 1.0
        np.testing.assert_array_equal(classifier.predict_proba(x, np.arange(5.0)), np.ones(5))
        draws = sample_censor_indicators(x, np.arange(5.0), classifier, np.random.default_rng(1))
        np.testing.assert_array_equal(draws, np.ones(5))

    def test_class_weights(self) -> None:
        weights = class_weights(np.array([1, 1, 1, 0]), balance=True)
        np.testing.assert_allclose(weights, [2 / 3, 2 / 3, 2 / 3, 2.0])
        np.testing.assert_array_equal(class_weights(np.array([1, 0]), balance=False), [1.0, 1.0])

    def test_dict_round_trip(self) -> None:
        x, times, events = _separable(n=40, seed=4)
        config = ClassifierConfig(hidden_units=3, epochs=10)
        classifier = train_censor_classifier(x, times, events, config, np.random.default_rng(5))
        restored = CensorClassifier.from_dict(classifier.to_dict())
        np.testing.assert_allclose(
            restored.predict_proba(x, times), classifier.predict_proba(x, times)
        )

    def test_wrong_feature_width(self) -> None:
        x, times, events = _separable(n=20)
        classifier = train_censor_classifier(
            x, times, events, ClassifierConfig(epochs=1), np.random.default_rng(0)
        )
        with pytest.raises(ContractError):
            classifier.predict_proba(np.ones((2, 3)), np.ones(2))

    @pytest.mark.parametrize("balance", [True, False])
    def test_output_bias_carries_class_prior(self, balance: bool) -> None:
        """平衡加权时输出偏置加上 log(n_1 / n_0)"""
        x, times, _ = _separable(n=10)
        events = np.array([1, 1, 1, 1, 1, 1, 1, 1, 0, 0])
        config = ClassifierConfig(hidden_units=3, epochs=0, balance_classes=balance)
        classifier = train_censor_classifier(x, times, events, config, np.random.default_rng(0))
        assert classifier.network is not None
        bias = classifier.network.layers[-1].bias.value
        np.testing.assert_allclose(bias, [np.log(4.0) if balance else 0.0])

    def test_uninformative_inputs_give_training_rate(self) -> None:
        """输入无信息时，平衡加权后的概率等于训练集 δ = 1 的比例"""
        events = np.array([1, 1, 1, 1, 1, 1, 1, 1, 0, 0])
        x = np.zeros((10, 2))
        times = np.full(10, 5.0)
        classifier = train_censor_classifier(
            x, times, events, ClassifierConfig(hidden_units=4), np.random.default_rng(1)
        )
        np.testing.assert_allclose(classifier.predict_proba(x, times), 0.8, atol=1e-6)

    @pytest.mark.slow
    def test_sampled_rate_matches_training_rate(self) -> None:
        """10 个种子下抽样得到的 δ = 1 比例与训练集相差不超过 0.1"""
        for seed in range(10):
            ds = synth_linear(n=200, rng=np.random.default_rng(seed))
            x = (ds.features - ds.features.mean(axis=0)) / ds.features.std(axis=0)
            rng = np.random.default_rng(100 + seed)
            classifier = train_censor_classifier(x, ds.times, ds.events, ClassifierConfig(), rng)
            draws = sample_censor_indicators(x, ds.times, classifier, rng)
            assert abs(draws.mean() - ds.events.mean()) <= 0.1, seed


class TestGenerate:
    """生成三元组"""

    def test_instance_uses_training_times(self, model: TrainedModel) -> None:
        ds = synth_linear(n=15, rng=np.random.default_rng(1))
        triplet = generate_instance(ds.features[0], model, np.random.default_rng(0))
        assert triplet.features.shape == (2,)
        assert triplet.event in (0, 1)
        assert np.min(np.abs(ds.times - triplet.time)) < 1e-9 * ds.times.max()

    def test_dataset_shape_and_determinism(self, model: TrainedModel) -> None:
        features = synth_linear(n=3, rng=np.random.default_rng(8)).features
        a = generate_dataset(model, features, np.random.default_rng(9))
        b = generate_dataset(model, features, np.random.default_rng(9))
        assert len(a) == 6
        assert a.columns == ["x1", "x2"]
        assert set(np.unique(a.events)) <= {0, 1}
        assert np.all(a.times >= 0.0)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.events, b.events)

    def test_empty_input(self, model: TrainedModel) -> None:
        empty = generate_dataset(model, np.zeros((0, 2)), np.random.default_rng(0))
        assert len(empty) == 0

    def test_requires_classifier(self, model: TrainedModel) -> None:
        bare = replace(model, classifier=None)
        with pytest.raises(ContractError):
            generate_instance(np.zeros(2), bare, np.random.default_rng(0))


@pytest.fixture(scope="module")
def linear_run() -> tuple[SurvivalDataset, TrainedModel, list[EpochRecord]]:
    """默认超参数在 400 行线性数据上训练 40 个 epoch，保留 1/4 计算 C-index"""
    ds = synth_linear(n=200, rng=np.random.default_rng(30))
    records: list[EpochRecord] = []
    config = SurvGenConfig(train=TrainConfig(epochs=40, holdout_fraction=0.25))
    model = fit(ds, config, rng=31, on_epoch=records.append)
    return ds, model, records


@pytest.mark.slow
class TestLinearFidelity:
    """线性合成数据上的排序能力与生成保真度"""

    def test_holdout_c_index(
        self, linear_run: tuple[SurvivalDataset, TrainedModel, list[EpochRecord]]
    ) -> None:
        _, _, records = linear_run
        c_index = records[-1].holdout_c_index
        assert c_index is not None
        assert c_index > 0.7

    def test_km_fidelity(
        self, linear_run: tuple[SurvivalDataset, TrainedModel, list[EpochRecord]]
    ) -> None:
        """每行生成 5 个实例，KM 曲线最大偏差不超过 0.15"""
        ds, model, _ = linear_run
        generated = generate_dataset(model, np.tile(ds.features, (5, 1)), np.random.default_rng(32))
        assert km_fidelity(ds, generated) <= 0.15

    def test_censoring_rate(
        self, linear_run: tuple[SurvivalDataset, TrainedModel, list[EpochRecord]]
    ) -> None:
        """10 个种子的平均生成删失率与训练集相差不超过 0.1"""
        ds, model, _ = linear_run
        rates = [
            generate_dataset(model, ds.features, np.random.default_rng(seed)).censoring_rate
            for seed in range(10)
        ]
        assert abs(np.mean(rates) - ds.censoring_rate) <= 0.1
