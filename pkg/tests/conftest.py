# coding=utf-8
"""
共享测试夹具：小规模合成语料、小维度模型与临时配置
"""

from pathlib import Path

import numpy as np
import pytest
import yaml

from shopradar.core.config import GeneratorConfig, ModelConfig, PipelineConfig
from shopradar.core.loader import build_config
from shopradar.corpus.generator import generate
from shopradar.corpus.loader import load_corpus
from shopradar.model.towers import TwoTowerModel
from shopradar.numerics import precision

TINY_CORPUS = {
    "n_items": 200,
    "n_users": 30,
    "n_queries": 60,
    "vocab_size": 120,
    "n_categories": 4,
    "n_leaf_per_category": 2,
    "n_brands": 6,
    "n_shops": 10,
    "n_train_clicks": 300,
    "n_test_clicks": 40,
    "noise_rate": 0.0,
    "history_queries": 2,
    "title_len": [3, 6],
    "history_len": [10, 200],
}

ENV_KEYS = (
    "SHOPRADAR_SEED", "SHOPRADAR_DEBUG", "SHOPRADAR_DATA_DIR", "SHOPRADAR_NOISE_RATE",
    "SHOPRADAR_TEMPERATURE", "SERVE_HOST", "SERVE_PORT", "TIMEZONE", "CONFIG_PATH",
)

TINY_MODEL = {
    "dim": 8,
    "heads": 2,
    "lstm_layers": 2,
    "lstm_dropout": 0.1,
    "ngram_buckets": 64,
    "ffn_mult": 2,
    "max_realtime": 8,
    "max_short": 12,
    "max_long": 12,
}


def tiny_generator_config(**changes) -> GeneratorConfig:
    values = dict(TINY_CORPUS)
    values["title_len"] = tuple(values["title_len"])
    values["history_len"] = tuple(values["history_len"])
    values["seed"] = 7
    values.update(changes)
    return GeneratorConfig(**values)


def tiny_model_config(**changes) -> ModelConfig:
    values = dict(TINY_MODEL)
    values.update(changes)
    return ModelConfig(**values)


def tiny_config_data(data_dir: Path, **sections) -> dict:
    """YAML 形式（小写键）的完整小规模配置"""
    data = {
        "app": {"seed": 7, "timezone": "Asia/Shanghai", "debug": False},
        "paths": {"data_dir": str(data_dir)},
        "corpus": dict(TINY_CORPUS),
        "model": dict(TINY_MODEL),
        "training": {
            "temperature": 2.0,
            "hard_negatives": 4,
            "shared_negatives": 32,
            "batch_size": 16,
            "epochs": 1,
            "max_steps": 2,
            "eval_every": 0,
            "eval_queries": 5,
            "eval_k": 10,
        },
        "index": {
            "n_columns": 2,
            "branching": 4,
            "depth": 1,
            "leaf_cap": 16,
            "max_scan_ratio": 1.0,
            "kmeans_iterations": 10,
        },
        "eval": {
            "recall_k": 20,
            "good_k": 20,
            "scan_ratio": 1.0,
            "max_queries": 10,
            "tau_values": [0.5, 2.0],
            "hard_negative_values": [0, 4],
            "sweep_steps": 1,
        },
        "serve": {"default_k": 0, "scan_ratio": 1.0},
    }
    for section, values in sections.items():
        data.setdefault(section, {}).update(values)
    return data


def write_config(path: Path, data: dict) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(data, allow_unicode=True, sort_keys=True), encoding="utf-8")
    return str(path)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """环境变量覆盖会改变配置，测试期间统一清空"""
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus")
    generate(tiny_generator_config(), str(out))
    return out


@pytest.fixture(scope="session")
def corpus(corpus_dir):
    model = tiny_model_config()
    return load_corpus(
        str(corpus_dir),
        max_realtime=model.max_realtime,
        max_short=model.max_short,
        max_long=model.max_long,
        max_queries=TINY_CORPUS["history_queries"],
    )


@pytest.fixture
def model_config() -> ModelConfig:
    return tiny_model_config()


@pytest.fixture
def model(corpus, model_config) -> TwoTowerModel:
    return TwoTowerModel.from_corpus(corpus, model_config, seed=3)


@pytest.fixture
def config_data(tmp_path) -> dict:
    return tiny_config_data(tmp_path / "output")


@pytest.fixture
def pipeline_config(config_data) -> PipelineConfig:
    return PipelineConfig.from_config(build_config(config_data))


@pytest.fixture
def float64():
    with precision(np.float64):
        yield


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def make_generator_config():
    return tiny_generator_config


@pytest.fixture
def make_model_config():
    return tiny_model_config


@pytest.fixture
def make_config_file(tmp_path):
    """写出小规模配置文件，返回 (路径, 数据目录)"""
    def factory(**sections):
        data_dir = tmp_path / "output"
        data = tiny_config_data(data_dir, **sections)
        return write_config(tmp_path / "config.yaml", data), data_dir
    return factory
