# coding=utf-8
"""
在线检索路径

用户塔推理 → 多列 ANN 检索 → 布尔过滤。
未知 user_id 走冷启动路径（没有任何行为与历史 query），仍返回 k 个检索结果。
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from shopradar.core.errors import InvalidParameterError
from shopradar.corpus.models import Corpus
from shopradar.index.searcher import AnnIndex
from shopradar.model.towers import TwoTowerModel
from shopradar.model.vocab import tokenize
from shopradar.relevance.filter import filter_results
from shopradar.relevance.inverted import InvertedIndex
from shopradar.relevance.key_terms import KeyTermRule, extract_key_terms

logger = logging.getLogger(__name__)


@dataclass
class ServeResponse:
    """一次检索的返回"""

    item_ids: List[int] = field(default_factory=list)      # 过滤后，保持 ANN 分数顺序
    scores: List[float] = field(default_factory=list)
    kept: int = 0
    dropped: int = 0
    required: List[str] = field(default_factory=list)
    retrieved: List[int] = field(default_factory=list)     # 过滤前
    column_latency_ms: List[float] = field(default_factory=list)
    cold_user: bool = False

    def to_dict(self, verbose: bool = False) -> Dict[str, Any]:
        data = {
            "item_ids": self.item_ids,
            "scores": self.scores,
            "kept": self.kept,
            "dropped": self.dropped,
        }
        if verbose:
            data.update({
                "required": self.required,
                "retrieved": self.retrieved,
                "column_latency_ms": self.column_latency_ms,
                "cold_user": self.cold_user,
            })
        return data


class ServePipeline:
    """
    检索服务（模型与索引加载后只读，可并发调用）

    Args:
        model: 已加载检查点的模型
        corpus: 提供用户日志
        index: ANN 索引
        inverted: 倒排索引
        rule: 关键词规则
        default_k: 请求未指定 k 时的返回数
        scan_ratio: 每列扫描比例
    """

    def __init__(self, model: TwoTowerModel, corpus: Corpus, index: AnnIndex, inverted: InvertedIndex,
                 rule: KeyTermRule, default_k: int, scan_ratio: float):
        self.model = model
        self.corpus = corpus
        self.index = index
        self.inverted = inverted
        self.rule = rule
        self.default_k = default_k
        self.scan_ratio = scan_ratio

    def encode(self, user_id: Optional[int], query: str) -> np.ndarray:
        user = self.corpus.user(int(user_id)) if user_id is not None else None
        return self.model.encode_users([query], [user]).data[0]

    def search(self, user_id: Optional[int], query: str, k: Optional[int] = None,
               scan_ratio: Optional[float] = None) -> ServeResponse:
        """
        Raises:
            InvalidParameterError: query 为空、k 非正或小于列数
        """
        segments = tokenize(query)
        k = self.default_k if k is None else int(k)
        if k < 1:
            raise InvalidParameterError(f"k 必须 ≥ 1，当前 {k}")
        cold = user_id is None or self.corpus.user(int(user_id)) is None
        h_qu = self.encode(None if cold else user_id, query)
        result = self.index.search(h_qu, k, self.scan_ratio if scan_ratio is None else scan_ratio)
        required = extract_key_terms([s.text for s in segments], self.rule)
        filtered = filter_results(result.item_ids, required, self.inverted)
        score_of = dict(zip(result.item_ids, result.scores))
        if cold:
            logger.debug(f"[服务] 用户 {user_id} 无行为记录，使用冷启动路径")
        return ServeResponse(
            item_ids=filtered.kept,
            scores=[score_of[i] for i in filtered.kept],
            kept=filtered.kept_count,
            dropped=filtered.dropped_count,
            required=required,
            retrieved=result.item_ids,
            column_latency_ms=result.column_latency_ms,
            cold_user=cold,
        )

    def handle(self, request: Dict[str, Any]) -> Dict[str, Any]:
        """处理一条 JSON 请求 {user_id, query, k}"""
        if not isinstance(request, dict) or "query" not in request:
            raise InvalidParameterError("请求必须是包含 query 字段的 JSON 对象")
        user_id = request.get("user_id")
        response = self.search(
            None if user_id is None else int(user_id),
            str(request["query"]),
            request.get("k"),
        )
        return response.to_dict(verbose=bool(request.get("verbose", False)))
