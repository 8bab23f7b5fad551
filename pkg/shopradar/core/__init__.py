# coding=utf-8
"""
核心模块 - 配置管理与错误类型
"""

from shopradar.core.loader import load_config, build_config, apply_overrides
from shopradar.core.config import (
    GeneratorConfig,
    ModelConfig,
    LossConfig,
    TrainConfig,
    IndexConfig,
    RelevanceConfig,
    FunnelConfig,
    EvalConfig,
    PipelineConfig,
    ceil_div,
    scan_budget,
)
from shopradar.core.errors import (
    ShopRadarError,
    UsageError,
    ConfigurationError,
    InvalidParameterError,
    DataError,
    DanglingReferenceError,
    MalformedRecordError,
    CheckpointFormatError,
    IndexFormatError,
    NumericError,
    ShapeError,
)

__all__ = [
    "load_config",
    "build_config",
    "apply_overrides",
    # 配置节
    "GeneratorConfig",
    "ModelConfig",
    "LossConfig",
    "TrainConfig",
    "IndexConfig",
    "RelevanceConfig",
    "FunnelConfig",
    "EvalConfig",
    "PipelineConfig",
    "ceil_div",
    "scan_budget",
    # 错误
    "ShopRadarError",
    "UsageError",
    "ConfigurationError",
    "InvalidParameterError",
    "DataError",
    "DanglingReferenceError",
    "MalformedRecordError",
    "CheckpointFormatError",
    "IndexFormatError",
    "NumericError",
    "ShapeError",
]
