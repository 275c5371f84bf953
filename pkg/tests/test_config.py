"""配置管理模块测试"""

from pathlib import Path

import pytest

from src.config.manager import ConfigManager, LossWeights, SurvGenConfig, TrainConfig


class TestSurvGenConfig:
    """测试配置数据模型"""

    def test_default_config_creation(self) -> None:
        """测试默认配置创建"""
        config = SurvGenConfig()
        assert config.loss.mmd_lambda == 40.0
        assert config.model.latent_dim == 8
        assert config.train.holdout_fraction == 0.0
        assert config.eval.reps == 20
        assert config.eval.beran_taus[0] == 1e-3

    def test_config_serialization(self) -> None:
        """测试配置序列化"""
        config = SurvGenConfig(train=TrainConfig(epochs=3, seed=11))
        restored = SurvGenConfig.model_validate_json(config.model_dump_json())
        assert restored == config

    def test_rejects_negative_weight(self) -> None:
        with pytest.raises(ValueError):
            LossWeights(gamma1=-1.0)

    def test_rejects_nonpositive_hidden_size(self) -> None:
        with pytest.raises(ValueError):
            SurvGenConfig.model_validate({"model": {"hidden_sizes": [4, 0]}})


class TestConfigManager:
    """测试配置管理器"""

    def test_no_path_returns_defaults(self) -> None:
        manager = ConfigManager()
        assert manager.get_config_path() is None
        assert manager.load() == SurvGenConfig()

    def test_missing_file_returns_defaults(self, tmp_path: Path) -> None:
        """配置文件不存在时使用默认值且不创建文件"""
        config_path = tmp_path / "survgen.json"
        assert ConfigManager(config_path).load() == SurvGenConfig()
        assert not config_path.exists()

    def test_save_and_load_roundtrip(self, tmp_path: Path) -> None:
        """测试保存和加载往返"""
        config_path = tmp_path / "conf" / "survgen.json"
        manager = ConfigManager(config_path=config_path)
        config = SurvGenConfig(loss=LossWeights(gamma4=0.2), train=TrainConfig(batch_size=16))
        manager.save(config)

        loaded = manager.load()
        assert loaded.loss.gamma4 == 0.2
        assert loaded.train.batch_size == 16

    def test_partial_file_keeps_other_defaults(self, tmp_path: Path) -> None:
        config_path = tmp_path / "survgen.json"
        config_path.write_text('{"train": {"epochs": 5}}', encoding="utf-8")
        config = ConfigManager(config_path).load()
        assert config.train.epochs == 5
        assert config.train.batch_size == 64

    def test_invalid_json(self, tmp_path: Path) -> None:
        config_path = tmp_path / "survgen.json"
        config_path.write_text("{broken", encoding="utf-8")
        with pytest.raises(ValueError, match="配置文件格式错误"):
            ConfigManager(config_path).load()

    def test_validation_failure(self, tmp_path: Path) -> None:
        config_path = tmp_path / "survgen.json"
        config_path.write_text('{"train": {"epochs": -1}}', encoding="utf-8")
        with pytest.raises(ValueError, match="配置文件验证失败"):
            ConfigManager(config_path).load()

    def test_save_without_path(self) -> None:
        with pytest.raises(OSError):
            ConfigManager().save(SurvGenConfig())
