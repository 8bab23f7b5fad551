# coding=utf-8
"""
配置加载、覆盖项、环境变量与各配置节校验
"""

from pathlib import Path

import pytest

from shopradar.core.config import (
    EvalConfig,
    FunnelConfig,
    GeneratorConfig,
    IndexConfig,
    LossConfig,
    ModelConfig,
    PipelineConfig,
    TrainConfig,
    ceil_div,
    scan_budget,
)
from shopradar.core.errors import ConfigurationError
from shopradar.core.loader import apply_overrides, build_config, load_config

REPO_CONFIG = Path(__file__).resolve().parents[1] / "config" / "config.yaml"


class TestLoadConfig:

    def test_repository_config_is_valid(self):
        pipeline = PipelineConfig.from_config(load_config(str(REPO_CONFIG)))
        assert pipeline.training.loss.temperature == 2.0
        assert pipeline.training.loss.hard_neg_count == 684
        assert pipeline.training.shared_negatives == 2048
        assert pipeline.index.n_columns == 6
        assert pipeline.evaluation.funnel.rank_keep == pytest.approx(0.34)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "absent.yaml"))

    def test_unparseable_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("training: [unclosed", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(str(path))

    def test_config_path_from_environment(self, monkeypatch):
        monkeypatch.setenv("CONFIG_PATH", str(REPO_CONFIG))
        assert load_config()["INDEX"]["N_COLUMNS"] == 6

    def test_empty_document_uses_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        config = load_config(str(path))
        assert config["APP"]["SEED"] == 42
        assert config["TRAINING"]["TEMPERATURE"] == 2.0


class TestOverrides:

    def test_scalar_values_parsed_as_yaml(self):
        data = apply_overrides({}, ["training.temperature=0.5", "model.use_mgs=false", "index.n_columns=3"])
        assert data == {"training": {"temperature": 0.5}, "model": {"use_mgs": False}, "index": {"n_columns": 3}}

    def test_override_reaches_built_config(self):
        config = build_config({"training": {"temperature": 2.0}}, ["training.temperature=0.1"])
        assert config["TRAINING"]["TEMPERATURE"] == pytest.approx(0.1)

    @pytest.mark.parametrize("item", ["temperature", "temperature=1", "training.temperature.x=1"])
    def test_malformed_override(self, item):
        data = {"training": {"temperature": 2.0}}
        with pytest.raises(ConfigurationError):
            apply_overrides(data, [item])


class TestEnvironment:

    def test_seed_and_temperature(self, monkeypatch):
        monkeypatch.setenv("SHOPRADAR_SEED", "99")
        monkeypatch.setenv("SHOPRADAR_TEMPERATURE", "0.5")
        config = build_config({"app": {"seed": 1}, "training": {"temperature": 3.0}})
        assert config["APP"]["SEED"] == 99
        assert config["TRAINING"]["TEMPERATURE"] == 0.5

    def test_invalid_numbers_fall_back(self, monkeypatch):
        monkeypatch.setenv("SHOPRADAR_SEED", "abc")
        monkeypatch.setenv("SHOPRADAR_NOISE_RATE", "lots")
        config = build_config({"app": {"seed": 5}, "corpus": {"noise_rate": 0.1}})
        assert config["APP"]["SEED"] == 5
        assert config["CORPUS"]["NOISE_RATE"] == 0.1

    def test_serve_and_debug(self, monkeypatch):
        monkeypatch.setenv("SERVE_HOST", "0.0.0.0")
        monkeypatch.setenv("SERVE_PORT", "9001")
        monkeypatch.setenv("SHOPRADAR_DEBUG", "true")
        config = build_config({})
        assert config["SERVE"] == {"HOST": "0.0.0.0", "PORT": 9001, "DEFAULT_K": 0, "SCAN_RATIO": 0.2}
        assert config["APP"]["DEBUG"] is True


class TestPaths:

    def test_relative_paths_live_under_data_dir(self, tmp_path):
        paths = build_config({"paths": {"data_dir": str(tmp_path)}})["PATHS"]
        assert paths["CORPUS_DIR"] == str(tmp_path / "corpus")
        assert paths["CHECKPOINT"] == str(tmp_path / "model" / "checkpoint.mgd")
        assert paths["EMBEDDINGS"] == str(tmp_path / "model" / "items.mge")
        assert paths["LEXICON_DIR"] == str(tmp_path / "corpus" / "lexicons")

    def test_absolute_paths_kept(self, tmp_path):
        target = tmp_path / "elsewhere" / "ckpt.mgd"
        paths = build_config({"paths": {"data_dir": "output", "checkpoint": str(target)}})["PATHS"]
        assert paths["CHECKPOINT"] == str(target)

    def test_data_dir_from_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("SHOPRADAR_DATA_DIR", str(tmp_path))
        paths = build_config({"paths": {"data_dir": "ignored"}})["PATHS"]
        assert paths["INDEX_DIR"] == str(tmp_path / "index")


class TestSections:

    def test_model_feature_widths(self):
        widths = ModelConfig(dim=128).resolved_widths()
        assert widths == {"item": 64, "leaf": 16, "category": 16, "brand": 16, "shop": 16}
        assert ModelConfig(dim=4, heads=2).resolved_widths()["shop"] == 1
        assert ModelConfig(dim=32, feature_widths={"brand": 8}).resolved_widths()["brand"] == 8

    @pytest.mark.parametrize("changes", [
        {"dim": 30, "heads": 8},
        {"fusion": "concat"},
        {"lstm_dropout": 1.0},
        {"feature_widths": {"color": 4}},
    ])
    def test_model_validation(self, changes):
        with pytest.raises(ConfigurationError):
            ModelConfig(**changes).validate()

    @pytest.mark.parametrize("changes", [
        {"temperature": 0.0},
        {"temperature": -1.0},
        {"mix_bounds": (0.6, 0.4)},
        {"mix_bounds": (0.0, 1.5)},
        {"loss_kind": "hinge", "margin": 0.0},
        {"loss_kind": "triplet"},
    ])
    def test_loss_validation(self, changes):
        with pytest.raises(ConfigurationError):
            LossConfig(**changes).validate()

    def test_shared_negatives_must_cover_hard_negatives(self):
        config = TrainConfig(loss=LossConfig(hard_neg_count=100), shared_negatives=50)
        with pytest.raises(ConfigurationError):
            config.validate()
        TrainConfig(loss=LossConfig(hard_neg_count=50), shared_negatives=50).validate()

    def test_generator_validation(self):
        with pytest.raises(ConfigurationError):
            GeneratorConfig(noise_rate=1.5).validate()
        with pytest.raises(ConfigurationError):
            GeneratorConfig(title_len=(5, 2)).validate()
        with pytest.raises(ConfigurationError):
            GeneratorConfig(action_freq={"click": 1.0}).validate()

    def test_index_validation(self):
        with pytest.raises(ConfigurationError):
            IndexConfig(n_columns=0).validate()
        with pytest.raises(ConfigurationError):
            IndexConfig(max_scan_ratio=0.0).validate()
        with pytest.raises(ConfigurationError):
            IndexConfig(branching=1).validate()

    def test_eval_validation(self):
        with pytest.raises(ConfigurationError):
            EvalConfig(scan_ratio=1.5).validate()
        with pytest.raises(ConfigurationError):
            EvalConfig(funnel=FunnelConfig(rank_keep=0.0)).validate()

    def test_unknown_mandatory_class(self):
        config = build_config({"relevance": {"mandatory": {"brand": True}}})
        config["RELEVANCE"]["MANDATORY"]["SIZE"] = True
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_config(config)


class TestHelpers:

    def test_ceil_div(self):
        assert ceil_div(9600, 6) == 1600
        assert ceil_div(10, 3) == 4
        assert ceil_div(0, 3) == 0

    def test_scan_budget(self):
        assert scan_budget(0.01, 1000) == 10
        assert scan_budget(0.001, 10) == 1
        assert scan_budget(0.05, 130) == 7
        assert scan_budget(1.0, 17) == 17

    def test_serve_k(self, pipeline_config):
        assert pipeline_config.serve_k(200) == 20
        assert pipeline_config.serve_k(5) == pipeline_config.index.n_columns
        assert pipeline_config.serve_k(10_000_000) == 9600
        pipeline_config.serve_default_k = 50
        assert pipeline_config.serve_k(200) == 50
