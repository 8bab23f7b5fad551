# coding=utf-8
"""
配置加载模块

负责从 YAML 配置文件、环境变量和命令行 --set 覆盖项加载配置。
"""

import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

from .errors import ConfigurationError


def _get_env_bool(key: str) -> Optional[bool]:
    """从环境变量获取布尔值，如果未设置返回 None"""
    value = os.environ.get(key, "").strip().lower()
    if not value:
        return None
    return value in ("true", "1")


def _get_env_int(key: str, default: int = 0) -> int:
    """从环境变量获取整数值"""
    value = os.environ.get(key, "").strip()
    if not value:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _get_env_float(key: str) -> Optional[float]:
    """从环境变量获取浮点值，未设置时返回 None"""
    value = os.environ.get(key, "").strip()
    if not value:
        return None
    try:
        return float(value)
    except ValueError:
        return None


def _get_env_str(key: str, default: str = "") -> str:
    """从环境变量获取字符串值"""
    return os.environ.get(key, "").strip() or default


def _load_app_config(config_data: Dict) -> Dict:
    """加载应用配置"""
    app = config_data.get("app", {})
    debug_env = _get_env_bool("SHOPRADAR_DEBUG")
    return {
        "SEED": _get_env_int("SHOPRADAR_SEED") or app.get("seed", 42),
        "TIMEZONE": _get_env_str("TIMEZONE") or app.get("timezone", "Asia/Shanghai"),
        "DEBUG": debug_env if debug_env is not None else app.get("debug", False),
    }


def _load_paths_config(config_data: Dict) -> Dict:
    """加载路径配置（相对路径统一挂在 data_dir 下）"""
    paths = config_data.get("paths", {})
    data_dir = Path(_get_env_str("SHOPRADAR_DATA_DIR") or paths.get("data_dir", "output"))

    def _under(key: str, default: str) -> str:
        value = paths.get(key, default)
        if not value:
            return ""
        p = Path(value)
        return str(p if p.is_absolute() else data_dir / p)

    corpus_dir = _under("corpus_dir", "corpus")
    lexicon_dir = _under("lexicon_dir", "") or str(Path(corpus_dir) / "lexicons")
    return {
        "DATA_DIR": str(data_dir),
        "CORPUS_DIR": corpus_dir,
        "CHECKPOINT": _under("checkpoint", "model/checkpoint.mgd"),
        "METRICS": _under("metrics", "model/metrics.csv"),
        "EMBEDDINGS": _under("embeddings", "model/items.mge"),
        "INDEX_DIR": _under("index_dir", "index"),
        "REPORT_DIR": _under("report_dir", "report"),
        "LEXICON_DIR": lexicon_dir,
    }


def _load_corpus_config(config_data: Dict) -> Dict:
    """加载语料生成配置"""
    corpus = config_data.get("corpus", {})
    noise_env = _get_env_float("SHOPRADAR_NOISE_RATE")
    return {
        "N_ITEMS": corpus.get("n_items", 10000),
        "N_USERS": corpus.get("n_users", 2000),
        "N_QUERIES": corpus.get("n_queries", 3000),
        "VOCAB_SIZE": corpus.get("vocab_size", 2400),
        "N_CATEGORIES": corpus.get("n_categories", 20),
        "N_LEAF_PER_CATEGORY": corpus.get("n_leaf_per_category", 4),
        "N_BRANDS": corpus.get("n_brands", 60),
        "N_SHOPS": corpus.get("n_shops", 300),
        "N_TRAIN_CLICKS": corpus.get("n_train_clicks", 40000),
        "N_TEST_CLICKS": corpus.get("n_test_clicks", 2000),
        "NOISE_RATE": noise_env if noise_env is not None else corpus.get("noise_rate", 0.0),
        "HISTORY_QUERIES": corpus.get("history_queries", 4),
        "TITLE_LEN": list(corpus.get("title_len", [4, 8])),
        "HISTORY_LEN": list(corpus.get("history_len", [20, 320])),
        "ACTION_FREQ": dict(corpus.get("action_freq", {"click": 0.7, "buy": 0.1, "collect": 0.2})),
        "PURCHASE_AUX_RATE": corpus.get("purchase_aux_rate", 0.3),
    }


def _load_model_config(config_data: Dict) -> Dict:
    """加载模型结构配置"""
    model = config_data.get("model", {})
    return {
        "DIM": model.get("dim", 32),
        "HEADS": model.get("heads", 8),
        "LSTM_LAYERS": model.get("lstm_layers", 2),
        "LSTM_DROPOUT": model.get("lstm_dropout", 0.2),
        "NGRAM_BUCKETS": model.get("ngram_buckets", 65536),
        "FFN_MULT": model.get("ffn_mult", 4),
        "FEATURE_WIDTHS": dict(model.get("feature_widths") or {}),
        "USE_MGS": model.get("use_mgs", True),
        "FUSION": model.get("fusion", "transformer"),
        "QUERY_ATTENTION_SCALED": model.get("query_attention_scaled", False),
        "SELF_ATTENTION_SCALED": model.get("self_attention_scaled", True),
        "MAX_REALTIME": model.get("max_realtime", 50),
        "MAX_SHORT": model.get("max_short", 100),
        "MAX_LONG": model.get("max_long", 100),
    }


def _load_training_config(config_data: Dict) -> Dict:
    """加载训练配置"""
    training = config_data.get("training", {})
    temperature_env = _get_env_float("SHOPRADAR_TEMPERATURE")
    return {
        "LOSS": training.get("loss", "softmax"),
        "TEMPERATURE": temperature_env if temperature_env is not None else training.get("temperature", 2.0),
        "HARD_NEGATIVES": training.get("hard_negatives", 684),
        "MIX_BOUNDS": list(training.get("mix_bounds", [0.4, 0.6])),
        "HINGE_MARGIN": training.get("hinge_margin", 0.1),
        "HINGE_MARGINS": list(training.get("hinge_margins", [0.05, 0.1, 0.2, 0.5])),
        "SHARED_NEGATIVES": training.get("shared_negatives", 2048),
        "BATCH_SIZE": training.get("batch_size", 256),
        "EPOCHS": training.get("epochs", 1),
        "MAX_STEPS": training.get("max_steps", 0),
        "LEARNING_RATE": training.get("learning_rate", 0.1),
        "CLIP_NORM": training.get("clip_norm", 3.0),
        "EVAL_EVERY": training.get("eval_every", 50),
        "EVAL_QUERIES": training.get("eval_queries", 200),
        "EVAL_K": training.get("eval_k", 100),
    }


def _load_index_config(config_data: Dict) -> Dict:
    """加载 ANN 索引配置"""
    index = config_data.get("index", {})
    return {
        "N_COLUMNS": index.get("n_columns", 6),
        "BRANCHING": index.get("branching", 8),
        "DEPTH": index.get("depth", 2),
        "LEAF_CAP": index.get("leaf_cap", 64),
        "MAX_SCAN_RATIO": index.get("max_scan_ratio", 0.01),
        "KMEANS_SAMPLE_CAP": index.get("kmeans_sample_cap", 4_000_000),
        "KMEANS_ITERATIONS": index.get("kmeans_iterations", 20),
        "PER_COLUMN_K": index.get("per_column_k", 0),
    }


def _load_relevance_config(config_data: Dict) -> Dict:
    """加载相关性控制配置"""
    relevance = config_data.get("relevance", {})
    mandatory = relevance.get("mandatory", {})
    return {
        "MANDATORY": {
            "BRAND": mandatory.get("brand", True),
            "CATEGORY": mandatory.get("category", True),
            "COLOR": mandatory.get("color", False),
            "STYLE": mandatory.get("style", False),
            "AUDIENCE": mandatory.get("audience", False),
        },
    }


def _load_eval_config(config_data: Dict) -> Dict:
    """加载离线评估配置"""
    ev = config_data.get("eval", {})
    return {
        "RECALL_K": ev.get("recall_k", 100),
        "GOOD_K": ev.get("good_k", 100),
        "SCAN_RATIO": ev.get("scan_ratio", 0.2),
        "PRERANK_KEEP": ev.get("prerank_keep", 1.0),
        "RANK_KEEP": ev.get("rank_keep", 0.34),
        "MAX_QUERIES": ev.get("max_queries", 1000),
        "TAU_VALUES": list(ev.get("tau_values", [0.1, 0.5, 1.0, 2.0, 5.0])),
        "HARD_NEGATIVE_VALUES": list(ev.get("hard_negative_values", [0, 64, 256])),
        "SWEEP_STEPS": ev.get("sweep_steps", 300),
    }


def _load_serve_config(config_data: Dict) -> Dict:
    """加载在线服务配置"""
    serve = config_data.get("serve", {})
    return {
        "HOST": _get_env_str("SERVE_HOST") or serve.get("host", "127.0.0.1"),
        "PORT": _get_env_int("SERVE_PORT") or serve.get("port", 7788),
        "DEFAULT_K": serve.get("default_k", 0),
        "SCAN_RATIO": serve.get("scan_ratio", 0.2),
    }


def apply_overrides(config_data: Dict, overrides: Iterable[str]) -> Dict:
    """
    应用命令行覆盖项

    Args:
        config_data: 原始 YAML 字典（小写键）
        overrides: 形如 "training.temperature=0.1" 的字符串列表，值按 YAML 标量解析

    Returns:
        覆盖后的字典（原地修改）

    Examples:
        >>> apply_overrides({"training": {}}, ["training.temperature=0.5"])
        {'training': {'temperature': 0.5}}
    """
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"覆盖项格式错误: {item}", suggestion="格式应为 section.key=value")
        dotted, raw = item.split("=", 1)
        keys = [k.strip() for k in dotted.strip().split(".") if k.strip()]
        if len(keys) < 2:
            raise ConfigurationError(f"覆盖项缺少配置节: {item}", suggestion="格式应为 section.key=value")
        node = config_data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"覆盖项路径不是配置节: {dotted}")
        node[keys[-1]] = yaml.safe_load(raw)
    return config_data


def load_config(config_path: Optional[str] = None, overrides: Optional[Iterable[str]] = None) -> Dict[str, Any]:
    """
    加载配置文件

    Args:
        config_path: 配置文件路径，默认从环境变量 CONFIG_PATH 获取或使用 config/config.yaml
        overrides: 命令行覆盖项

    Returns:
        包含所有配置节的字典

    Raises:
        ConfigurationError: 配置文件不存在或无法解析
    """
    if config_path is None:
        config_path = os.environ.get("CONFIG_PATH", "config/config.yaml")

    if not Path(config_path).exists():
        raise ConfigurationError(f"配置文件 {config_path} 不存在")

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            config_data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"配置文件 {config_path} 解析失败: {e}")

    return build_config(config_data, overrides)


def build_config(config_data: Dict, overrides: Optional[Iterable[str]] = None) -> Dict[str, Any]:
    """从 YAML 字典构建配置（测试和 MCP 工具直接调用）"""
    config_data = apply_overrides(config_data, overrides or [])

    config: Dict[str, Any] = {}
    config["APP"] = _load_app_config(config_data)
    config["PATHS"] = _load_paths_config(config_data)
    config["CORPUS"] = _load_corpus_config(config_data)
    config["MODEL"] = _load_model_config(config_data)
    config["TRAINING"] = _load_training_config(config_data)
    config["INDEX"] = _load_index_config(config_data)
    config["RELEVANCE"] = _load_relevance_config(config_data)
    config["EVAL"] = _load_eval_config(config_data)
    config["SERVE"] = _load_serve_config(config_data)
    return config
