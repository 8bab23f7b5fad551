# coding=utf-8
"""
评估模块 - 离线指标、评估流程、参数扫描
"""

from shopradar.evaluation.metrics import (
    EvalGroup,
    build_eval_groups,
    funnel_counts,
    good_rate,
    recall_at_k,
)
from shopradar.evaluation.harness import EvalReport, Evaluator, QueryRecord, aggregate, evaluate

__all__ = [
    # 指标
    "EvalGroup",
    "build_eval_groups",
    "funnel_counts",
    "good_rate",
    "recall_at_k",
    # 评估流程
    "EvalReport",
    "Evaluator",
    "QueryRecord",
    "aggregate",
    "evaluate",
]
