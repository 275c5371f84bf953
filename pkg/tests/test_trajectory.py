"""原型轨迹测试"""

import numpy as np
import pytest

from src.errors import ContractError
from src.model.trajectory import (
    embedding_trajectory,
    feature_trajectory,
    prior_density,
    smoothed_density,
    time_grid,
    trajectory_weights,
)
from src.survival.types import DiscreteEventDistribution


class TestTimeGrid:
    """时间网格"""

    def test_zero_to_ten(self) -> None:
        np.testing.assert_allclose(time_grid(0.0, 10.0, 5).points, [2.0, 4.0, 6.0, 8.0, 10.0])

    def test_offset_range(self) -> None:
        grid = time_grid(3.0, 7.0, 4)
        np.testing.assert_allclose(grid.points, [4.0, 5.0, 6.0, 7.0])
        assert len(grid) == 4

    def test_empty_range_rejected(self) -> None:
        with pytest.raises(ContractError):
            time_grid(5.0, 5.0, 3)
        with pytest.raises(ContractError):
            time_grid(0.0, 1.0, 0)

    def test_nearest(self) -> None:
        grid = time_grid(0.0, 10.0, 5)
        np.testing.assert_array_equal(grid.nearest([0.0, 4.9, 5.1, 100.0]), [0, 1, 2, 4])


class TestDensities:
    """先验与平滑密度"""

    def test_prior_density_one_sigma(self) -> None:
        value = prior_density(np.array([1.0, 0.0]), np.zeros(2), np.ones(2))
        assert value == pytest.approx(np.exp(-0.5))

    def test_prior_density_rejects_zero_sigma(self) -> None:
        with pytest.raises(ContractError):
            prior_density(np.zeros(2), np.zeros(2), np.array([1.0, 0.0]))

    def test_single_support_point(self) -> None:
        """单点分布在任意时刻的平滑密度都是该点质量"""
        dist = DiscreteEventDistribution(np.array([2.0]), np.array([1.0]), 0.0)
        for t in (0.0, 2.0, 50.0):
            assert smoothed_density(t, dist, eta=3.0) == pytest.approx(1.0)

    def test_zero_eta_gives_mean_mass(self) -> None:
        dist = DiscreteEventDistribution(np.array([1.0, 2.0, 4.0]), np.array([0.1, 0.3, 0.2]), 0.4)
        assert smoothed_density(3.0, dist, eta=0.0) == pytest.approx(0.2)

    def test_large_eta_picks_nearest_mass(self) -> None:
        dist = DiscreteEventDistribution(np.array([1.0, 2.0, 4.0]), np.array([0.1, 0.3, 0.6]), 0.0)
        assert smoothed_density(2.1, dist, eta=200.0) == pytest.approx(0.3, abs=1e-6)


class TestTrajectoryWeights:
    """Bayes 权重"""

    def test_single_embedding(self) -> None:
        np.testing.assert_allclose(trajectory_weights(np.array([0.3]), np.array([0.7])), [1.0])

    def test_coincident_embeddings_share_weight(self) -> None:
        weights = trajectory_weights(np.full(4, 0.2), np.full(4, 0.5))
        np.testing.assert_allclose(weights, [0.25] * 4)

    def test_proportional_to_product(self) -> None:
        weights = trajectory_weights(np.array([0.2, 0.3]), np.array([1.0, 1.0]))
        np.testing.assert_allclose(weights, [0.4, 0.6])

    def test_all_zero_numerators_fall_back_to_uniform(self) -> None:
        np.testing.assert_allclose(trajectory_weights(np.zeros(2), np.ones(2)), [0.5, 0.5])


class TestEmbeddingTrajectory:
    """完整轨迹"""

    @pytest.fixture
    def trajectory(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rng = np.random.default_rng(12)
        mu, sigma = np.array([0.1, -0.2]), np.array([0.8, 1.2])
        z = mu + sigma * rng.standard_normal((6, 2))
        background = rng.standard_normal((15, 2))
        times = rng.uniform(1.0, 9.0, 15)
        events = rng.integers(0, 2, 15)
        events[0] = 1
        grid = time_grid(0.0, 10.0, 8)
        alpha, latent = embedding_trajectory(
            z, mu, sigma, background, times, events, tau=1.0, eta=1.0, grid=grid
        )
        return z, alpha, latent

    def test_weights_form_distribution(self, trajectory) -> None:
        _, alpha, _ = trajectory
        assert alpha.shape == (8, 6)
        assert np.all(alpha >= 0)
        np.testing.assert_allclose(alpha.sum(axis=1), np.ones(8))

    def test_points_lie_in_convex_hull(self, trajectory) -> None:
        """ξ_z(t) 是采样嵌入的凸组合"""
        z, alpha, latent = trajectory
        np.testing.assert_allclose(latent, alpha @ z)
        assert np.all(latent >= z.min(axis=0) - 1e-12)
        assert np.all(latent <= z.max(axis=0) + 1e-12)

    def test_feature_trajectory_decodes_each_point(self, trajectory) -> None:
        _, alpha, latent = trajectory
        grid = time_grid(0.0, 10.0, 8)
        result = feature_trajectory(grid, alpha, latent, lambda points: 2.0 * points + 1.0)
        np.testing.assert_allclose(result.feature_points, 2.0 * latent + 1.0)
        assert result.weights.shape == (8, 6)
