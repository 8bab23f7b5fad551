# coding=utf-8
"""
离线评估流程

对每个评估 query：用户塔编码 → 检索（ANN 索引或精确内积）→ 布尔过滤 → 漏斗计数，
汇总 Recall@K、P_good（原始检索集合）、P_f_good（过滤后集合）与 Num_prank/Num_rank。
报告只包含确定性数值，不记录耗时，同一输入重复评估得到完全相同的报告。
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from shopradar.core.config import EvalConfig
from shopradar.corpus.models import Corpus
from shopradar.corpus.oracle import relevance_labels
from shopradar.evaluation.metrics import EvalGroup, build_eval_groups, funnel_counts, good_rate, recall_at_k
from shopradar.index.searcher import AnnIndex
from shopradar.model.towers import TwoTowerModel
from shopradar.relevance.filter import filter_results
from shopradar.relevance.inverted import InvertedIndex, build_inverted_index
from shopradar.relevance.key_terms import KeyTermRule, extract_key_terms

logger = logging.getLogger(__name__)


@dataclass
class QueryRecord:
    """单个 query 的评估记录"""

    user_id: int
    query_id: int
    targets: int
    recall: float
    p_good: float
    p_f_good: Optional[float]           # 过滤后为空时为 None
    num_prank: int
    num_rank: int
    required: List[str] = field(default_factory=list)
    kept: int = 0
    dropped: int = 0


@dataclass
class EvalReport:
    """评估报告"""

    recall_at_k: float = 0.0
    p_good: float = 0.0
    p_f_good: float = 0.0
    num_prank: float = 0.0
    num_rank: float = 0.0
    queries: int = 0
    skipped: int = 0
    filtered_empty: int = 0
    retriever: str = "ann"
    records: List[QueryRecord] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            "recall_at_k": self.recall_at_k,
            "p_good": self.p_good,
            "p_f_good": self.p_f_good,
            "num_prank": self.num_prank,
            "num_rank": self.num_rank,
            "queries": self.queries,
            "skipped": self.skipped,
            "filtered_empty": self.filtered_empty,
            "retriever": self.retriever,
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.summary()
        data["config"] = self.config
        data["records"] = [asdict(r) for r in self.records]
        return data


def aggregate(records: List[QueryRecord], skipped: int) -> EvalReport:
    """按固定顺序对逐 query 记录取均值"""
    report = EvalReport(records=records, queries=len(records), skipped=skipped)
    if not records:
        return report
    report.recall_at_k = float(np.mean([r.recall for r in records]))
    report.p_good = float(np.mean([r.p_good for r in records]))
    filtered = [r.p_f_good for r in records if r.p_f_good is not None]
    report.filtered_empty = len(records) - len(filtered)
    report.p_f_good = float(np.mean(filtered)) if filtered else 0.0
    report.num_prank = float(np.mean([r.num_prank for r in records]))
    report.num_rank = float(np.mean([r.num_rank for r in records]))
    return report


class Evaluator:
    """
    Args:
        model: 已加载参数的双塔模型
        corpus: 语料（提供测试点击与真值）
        config: 评估配置
        rule: 关键词规则
        index: ANN 索引；为 None 时对导出的商品嵌入做精确检索
        inverted: 倒排索引，None 时现场构建
    """

    def __init__(self, model: TwoTowerModel, corpus: Corpus, config: EvalConfig, rule: KeyTermRule,
                 index: Optional[AnnIndex] = None, inverted: Optional[InvertedIndex] = None):
        config.validate()
        self.model = model
        self.corpus = corpus
        self.config = config
        self.rule = rule
        self.index = index
        self.inverted = inverted or build_inverted_index(corpus)
        self._items: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return max(self.config.recall_k, self.config.good_k)

    def retrieve(self, h_qu: np.ndarray) -> List[int]:
        if self.index is not None:
            return self.index.search(h_qu, self.k, self.config.scan_ratio).item_ids
        if self._items is None:
            self._items = self.model.export_item_matrix()
        scores = self._items @ h_qu.astype(np.float32)
        ids = np.arange(scores.size)
        return ids[np.lexsort((ids, -scores))][: self.k].tolist()

    def evaluate_group(self, position: int, group: EvalGroup, h_qu: np.ndarray) -> QueryRecord:
        retrieved = self.retrieve(h_qu)
        recall = recall_at_k(retrieved[: self.config.recall_k], group.targets)
        top = retrieved[: self.config.good_k]
        labels = dict(zip(top, relevance_labels(self.corpus, top, group.query_tokens, group.query_category)))
        required = extract_key_terms([self.corpus.token_text(t) for t in group.query_tokens], self.rule)
        filtered = filter_results(top, required, self.inverted)
        p_f_good = good_rate(filtered.kept, labels) if filtered.kept else None
        rng = np.random.default_rng([self.config.funnel.seed, position])
        num_prank, num_rank = funnel_counts(filtered.kept, self.config.funnel, rng)
        return QueryRecord(
            user_id=group.user_id,
            query_id=group.query_id,
            targets=len(group.targets),
            recall=recall,
            p_good=good_rate(top, labels),
            p_f_good=p_f_good,
            num_prank=num_prank,
            num_rank=num_rank,
            required=required,
            kept=filtered.kept_count,
            dropped=filtered.dropped_count,
        )

    def run(self, batch_size: int = 256) -> EvalReport:
        groups = build_eval_groups(self.corpus, self.config.max_queries)
        usable = [g for g in groups if g.targets]
        skipped = len(groups) - len(usable)
        if skipped:
            logger.warning(f"[评估] {skipped} 个 query 目标集合为空，已跳过")

        records: List[QueryRecord] = []
        for start in range(0, len(usable), batch_size):
            chunk = usable[start:start + batch_size]
            h_qu = self.model.encode_users(
                [self.corpus.tokens_text(g.query_tokens) for g in chunk],
                [self.corpus.user(g.user_id) for g in chunk],
            ).data
            for offset, (group, vec) in enumerate(zip(chunk, h_qu)):
                records.append(self.evaluate_group(start + offset, group, vec))

        report = aggregate(records, skipped)
        report.retriever = "ann" if self.index is not None else "exact"
        report.config = {
            "evaluation": self.config.to_dict(),
            "mandatory": dict(self.rule.mandatory),
            "index": self.index.config.to_dict() if self.index is not None else None,
        }
        logger.info(
            f"[评估] {report.queries} 个 query: recall@{self.config.recall_k}={report.recall_at_k:.4f} "
            f"P_good={report.p_good:.4f} P_f_good={report.p_f_good:.4f} "
            f"Num_prank={report.num_prank:.1f} Num_rank={report.num_rank:.1f}"
        )
        return report


def evaluate(model: TwoTowerModel, corpus: Corpus, config: EvalConfig, rule: KeyTermRule,
             index: Optional[AnnIndex] = None) -> EvalReport:
    return Evaluator(model, corpus, config, rule, index).run()
