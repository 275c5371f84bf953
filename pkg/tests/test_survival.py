"""生存分析核心测试：估计器、C-index、Gumbel 采样"""

import numpy as np
import pytest

from src.autodiff import Node, grad_check
from src.autodiff import primitives as P
from src.errors import ContractError
from src.survival import (
    DiscreteEventDistribution,
    StepSurvivalFunction,
    SurvivalDataset,
    beran_graph,
    beran_sf,
    c_index_hard,
    expected_event_time,
    gumbel_sample_time,
    gumbel_sample_times,
    kaplan_meier,
    kernel_weights,
    km_density,
    sf_to_density,
)
from src.survival.metrics import comparable_pairs
from src.survival.sampling import gumbel_argmax, spawn_generators


def _dataset(times: list[float], events: list[int]) -> SurvivalDataset:
    return SurvivalDataset(np.zeros((len(times), 1)), np.array(times), np.array(events))


class TestSurvivalDataset:
    """数据集校验"""

    def test_negative_time_rejected(self) -> None:
        with pytest.raises(ContractError):
            _dataset([1.0, -0.5], [1, 0])

    def test_event_flag_rejected(self) -> None:
        with pytest.raises(ContractError):
            _dataset([1.0, 2.0], [1, 2])

    def test_defaults_and_subset(self) -> None:
        """默认列名与子集"""
        ds = SurvivalDataset(np.arange(6.0).reshape(3, 2), [3.0, 1.0, 2.0], [1, 0, 0])
        assert ds.columns == ["x1", "x2"]
        assert ds.censoring_rate == pytest.approx(2 / 3)
        sub = ds.subset([2, 0])
        np.testing.assert_array_equal(sub.times, [2.0, 3.0])
        np.testing.assert_array_equal(sub.features, [[4.0, 5.0], [0.0, 1.0]])

    def test_sorted_index_puts_events_first_at_ties(self) -> None:
        ds = _dataset([2.0, 1.0, 2.0], [0, 1, 1])
        np.testing.assert_array_equal(ds.sorted_index(), [1, 2, 0])


class TestStepSurvivalFunction:
    """阶梯生存函数"""

    def test_right_continuous_evaluation(self) -> None:
        sf = StepSurvivalFunction(np.array([1.0, 3.0]), np.array([0.5, 0.25]))
        np.testing.assert_allclose(sf([0.0, 1.0, 2.0, 3.0, 10.0]), [1.0, 0.5, 0.5, 0.25, 0.25])

    def test_increasing_values_rejected(self) -> None:
        with pytest.raises(ContractError):
            StepSurvivalFunction(np.array([1.0, 2.0]), np.array([0.3, 0.6]))

    def test_unsorted_times_rejected(self) -> None:
        with pytest.raises(ContractError):
            StepSurvivalFunction(np.array([2.0, 1.0]), np.array([0.6, 0.3]))

    def test_density_masses_must_sum_to_one(self) -> None:
        with pytest.raises(ContractError):
            DiscreteEventDistribution(np.array([1.0, 2.0]), np.array([0.2, 0.2]), 0.1)


class TestKaplanMeier:
    """Kaplan-Meier 估计"""

    def test_censored_middle_instance(self) -> None:
        """T = (1, 2, 3)，δ = (1, 0, 1)"""
        sf = kaplan_meier(_dataset([1.0, 2.0, 3.0], [1, 0, 1]))
        np.testing.assert_array_equal(sf.times, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(sf.values, [2 / 3, 2 / 3, 0.0])

    def test_ties(self) -> None:
        """同一时刻的事件与删失"""
        sf = kaplan_meier(_dataset([2.0, 2.0, 3.0], [1, 0, 1]))
        np.testing.assert_allclose(sf.values, [2 / 3, 0.0])

    def test_all_censored(self) -> None:
        sf = kaplan_meier(_dataset([1.0, 4.0], [0, 0]))
        np.testing.assert_allclose(sf.values, [1.0, 1.0])

    def test_empty_dataset(self) -> None:
        with pytest.raises(ContractError):
            kaplan_meier(_dataset([], []))

    def test_density_and_expected_time(self) -> None:
        """离散密度与期望时间"""
        ds = _dataset([1.0, 2.0, 3.0], [1, 0, 1])
        dist = km_density(ds)
        np.testing.assert_allclose(dist.masses, [1 / 3, 0.0, 2 / 3])
        assert dist.residual == pytest.approx(0.0)
        assert dist.mass_at(3.0) == pytest.approx(2 / 3)
        assert dist.mass_at(2.5) == 0.0
        assert expected_event_time(kaplan_meier(ds)) == pytest.approx(1.0 + 2 / 3 + 2 / 3)

    def test_density_round_trip(self) -> None:
        sf = kaplan_meier(_dataset([1.0, 2.0, 5.0, 7.0], [1, 1, 0, 0]))
        np.testing.assert_allclose(sf_to_density(sf).survival().values, sf.values)


class TestBeran:
    """Beran 估计"""

    def test_equidistant_weights(self) -> None:
        weights = kernel_weights([0.0, 0.0], np.array([[1.0, 0.0], [-1.0, 0.0]]), tau=1.0)
        np.testing.assert_allclose(weights, [0.5, 0.5])

    def test_nonpositive_tau(self) -> None:
        with pytest.raises(ContractError):
            kernel_weights([0.0], np.array([[1.0]]), tau=0.0)
        with pytest.raises(ContractError):
            beran_sf([0.0], np.array([[1.0]]), np.array([1.0]), np.array([1]), tau=-1.0)

    def test_empty_background(self) -> None:
        with pytest.raises(ContractError):
            beran_graph(np.zeros((1, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros(0), 1.0)

    @pytest.mark.parametrize("seed", range(50))
    def test_identical_embeddings_reduce_to_kaplan_meier(self, seed: int) -> None:
        """背景嵌入全相同时 Beran 与 KM 逐点一致"""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 31))
        times = rng.integers(1, 10, size=n).astype(float)
        events = rng.integers(0, 2, size=n)
        background = np.zeros((n, 3))
        beran = beran_sf(rng.standard_normal(3), background, times, events, tau=0.7)
        km = kaplan_meier(_dataset(list(times), list(events)))
        np.testing.assert_array_equal(beran.times, km.times)
        np.testing.assert_allclose(beran.values, km.values, rtol=0.0, atol=1e-12)

    def test_excluded_item_is_ignored(self) -> None:
        """屏蔽的背景项等价于从背景中删除"""
        background = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        times = np.array([1.0, 2.0, 3.0])
        events = np.array([1, 1, 0])
        query = np.array([[0.2, 0.3]])
        exclude = np.array([[True, False, False]])
        masked = beran_graph(query, background, times, events, 1.0, exclude)
        reduced = beran_sf(query[0], background[1:], times[1:], events[1:], 1.0)
        full = StepSurvivalFunction(masked.times, masked.survival.value[0])
        np.testing.assert_allclose(full(reduced.times), reduced.values, atol=1e-12)
        assert masked.weights.value[0, 0] == 0.0

    def test_graph_expected_time_matches_step_function(self) -> None:
        rng = np.random.default_rng(3)
        background = rng.standard_normal((12, 2))
        times = rng.uniform(0.5, 5.0, 12)
        events = rng.integers(0, 2, 12)
        query = rng.standard_normal((4, 2))
        out = beran_graph(query, background, times, events, 0.5)
        for row in range(4):
            sf = beran_sf(query[row], background, times, events, 0.5)
            assert out.expected_time.value[row] == pytest.approx(expected_event_time(sf))
            assert out.density.value[row].sum() <= 1.0 + 1e-12

    def test_single_event_background(self) -> None:
        sf = beran_sf([0.0], np.array([[1.0]]), np.array([4.0]), np.array([1]), 1.0)
        np.testing.assert_allclose(sf.values, [0.0])

    def test_expected_time_gradient(self) -> None:
        """期望时间对查询嵌入与 τ 的梯度"""
        rng = np.random.default_rng(8)
        background = rng.standard_normal((6, 2))
        times = np.array([0.5, 1.0, 1.5, 2.0, 3.0, 4.0])
        events = np.array([1, 0, 1, 1, 1, 0])
        query = rng.standard_normal((3, 2))

        def by_query(q: Node) -> Node:
            return P.sum_(beran_graph(q, background, times, events, 0.8).expected_time)

        def by_tau(tau: Node) -> Node:
            return P.sum_(beran_graph(query, background, times, events, tau).expected_time)

        assert grad_check(by_query, query) < 1e-4
        assert grad_check(by_tau, np.array([0.8])) < 1e-4


class TestCIndex:
    """硬 C-index"""

    def test_two_of_three_pairs(self) -> None:
        """T = (1, 2, 3) 全部未删失，T̂ = (1, 3, 2)"""
        score = c_index_hard(np.array([1.0, 3.0, 2.0]), np.array([1.0, 2.0, 3.0]), np.ones(3))
        assert score == pytest.approx(2 / 3)

    def test_censored_first_instance_follows_formula(self) -> None:
        """δ = (1, 0, 1)：只有以第一个实例为起点的对可比较"""
        score = c_index_hard(
            np.array([1.0, 3.0, 2.0]), np.array([1.0, 2.0, 3.0]), np.array([1, 0, 1])
        )
        assert score == pytest.approx(1.0)

    def test_perfect_ranking(self) -> None:
        t = np.array([1.0, 4.0, 2.0, 8.0])
        assert c_index_hard(t * 3.0, t, np.ones(4)) == pytest.approx(1.0)

    def test_ties_in_prediction_count_zero(self) -> None:
        assert c_index_hard(np.ones(2), np.array([1.0, 2.0]), np.ones(2)) == 0.0

    def test_undefined_without_pairs(self) -> None:
        assert c_index_hard(np.array([1.0, 2.0]), np.array([1.0, 2.0]), np.zeros(2)) is None

    def test_length_mismatch(self) -> None:
        with pytest.raises(ContractError):
            c_index_hard(np.ones(2), np.ones(3), np.ones(3))

    def test_comparable_pairs(self) -> None:
        mask = comparable_pairs(np.array([1.0, 2.0, 3.0]), np.array([1, 0, 1]))
        assert mask.sum() == 2
        assert mask[0, 1] and mask[0, 2]

    def test_invariant_under_increasing_transform(self) -> None:
        """只依赖预测值的顺序"""
        rng = np.random.default_rng(12)
        pred = rng.standard_normal(40)
        times = rng.uniform(1.0, 10.0, 40)
        events = rng.integers(0, 2, 40)
        score = c_index_hard(pred, times, events)
        assert score is not None
        assert c_index_hard(np.exp(pred), times, events) == score
        assert c_index_hard(2.0 * pred**3 + pred + 5.0, times, events) == score


class TestGumbelSampling:
    """Gumbel-max 采样"""

    def test_frequencies_match_masses(self) -> None:
        """20 万次抽样的总变差距离小于 0.01"""
        p = np.array([0.05, 0.4, 0.15, 0.3, 0.1])
        rng = np.random.default_rng(11)
        n = 200_000
        draws = gumbel_argmax(np.tile(np.log(p), (n, 1)), rng)
        freq = np.bincount(draws, minlength=p.size) / n
        assert 0.5 * np.abs(freq - p).sum() < 0.01

    def test_residual_mass_maps_to_last_time(self) -> None:
        dist = DiscreteEventDistribution(np.array([1.0, 2.0]), np.array([0.0, 0.0]), 1.0)
        rng = np.random.default_rng(0)
        assert {gumbel_sample_time(dist, rng) for _ in range(20)} == {2.0}

    def test_zero_mass_atoms_never_drawn(self) -> None:
        dist = DiscreteEventDistribution(np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, 0.0]), 0.0)
        rng = np.random.default_rng(1)
        assert {gumbel_sample_time(dist, rng) for _ in range(50)} == {2.0}

    def test_fixed_seed_is_reproducible(self) -> None:
        times = np.array([1.0, 2.0, 3.0])
        masses = np.tile([0.2, 0.3, 0.4], (10, 1))
        a = gumbel_sample_times(times, masses, np.random.default_rng(5))
        b = gumbel_sample_times(times, masses, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_spawned_streams_are_deterministic(self) -> None:
        first = [g.standard_normal() for g in spawn_generators(42, 3)]
        second = [g.standard_normal() for g in spawn_generators(42, 3)]
        assert first == second
        assert len(set(first)) == 3
