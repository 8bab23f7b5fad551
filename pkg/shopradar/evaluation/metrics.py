# coding=utf-8
"""
离线指标

- recall_at_k: |检索 ∩ 目标| / |目标|
- good_rate: 前 K 个结果中标签为 good 的比例
- funnel_counts: 过滤后进入粗排/精排的数量
- build_eval_groups: 把测试点击按 (用户, query) 分组，目标集合并入站外购买
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from shopradar.core.config import FunnelConfig
from shopradar.core.errors import DataError, InvalidParameterError
from shopradar.corpus.models import Corpus


@dataclass
class EvalGroup:
    """一个评估 query：同一用户在同一 query 下的全部目标商品"""

    user_id: int
    query_id: int
    query_tokens: List[int]
    query_category: int
    targets: Set[int] = field(default_factory=set)


def build_eval_groups(corpus: Corpus, max_queries: int = 0) -> List[EvalGroup]:
    """
    测试点击分组（按首次出现顺序），max_queries > 0 时只取前若干组

    点击与站外购买同等对待，不加权。
    """
    groups: Dict[Tuple[int, int], EvalGroup] = {}
    for click in corpus.test_clicks:
        key = (click.user_id, click.query_id)
        if key not in groups:
            groups[key] = EvalGroup(click.user_id, click.query_id, list(click.query_tokens), click.query_category)
        groups[key].targets.add(click.clicked_item_id)
    for purchase in corpus.purchases_aux:
        key = (purchase.user_id, purchase.query_id)
        if key in groups:
            groups[key].targets.add(purchase.item_id)
    ordered = list(groups.values())
    return ordered[:max_queries] if max_queries > 0 else ordered


def recall_at_k(retrieved: Sequence[int], targets: Set[int]) -> float:
    """
    Examples:
        >>> recall_at_k([1, 2, 9], {1, 2, 3, 4})
        0.5

    Raises:
        InvalidParameterError: 目标集合为空（调用方应跳过并计数）
    """
    if not targets:
        raise InvalidParameterError("目标集合为空，该 query 应跳过")
    return len(set(int(i) for i in retrieved) & targets) / len(targets)


def good_rate(retrieved: Sequence[int], labels: Dict[int, bool]) -> float:
    """
    P_good = Σ I(good) / K，K 取检索结果长度；空结果记为 0

    Raises:
        DataError: 某个检索结果缺少标签
    """
    if not retrieved:
        return 0.0
    good = 0
    for item_id in retrieved:
        if int(item_id) not in labels:
            raise DataError(f"商品 {item_id} 缺少相关性标签", code="MISSING_LABEL")
        good += bool(labels[int(item_id)])
    return good / len(retrieved)


def funnel_counts(filtered: Sequence[int], config: FunnelConfig,
                  rng: Optional[np.random.Generator] = None) -> Tuple[int, int]:
    """
    下游漏斗计数

    num_prank = round(prerank_keep · |过滤后|)，num_rank = round(rank_keep · num_prank)；
    保留集合由种子固定的子采样决定，因此计数与保留的商品都可复现。

    Examples:
        >>> funnel_counts(list(range(800)), FunnelConfig(1.0, 0.34))
        (800, 272)
    """
    rng = rng or np.random.default_rng(config.seed)
    survivors = np.asarray(filtered, dtype=np.int64)
    num_prank = int(round(config.prerank_keep * survivors.size))
    prerank = rng.permutation(survivors)[:num_prank]
    num_rank = int(round(config.rank_keep * num_prank))
    ranked = rng.permutation(prerank)[:num_rank]
    return int(prerank.size), int(ranked.size)
