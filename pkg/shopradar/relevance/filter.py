# coding=utf-8
"""
布尔匹配过滤

(ANN 结果) AND (必选词 1) AND (必选词 2) ...

必选词 "brand:adidas" 的满足条件是：商品带有属性词 brand:adidas，或标题中含有 adidas。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from shopradar.relevance.inverted import InvertedIndex, intersect_sorted, union_sorted
from shopradar.relevance.key_terms import split_term

logger = logging.getLogger(__name__)


@dataclass
class FilterResult:
    """过滤结果，kept 保持输入顺序"""

    kept: List[int] = field(default_factory=list)
    required: List[str] = field(default_factory=list)
    input_count: int = 0

    @property
    def kept_count(self) -> int:
        return len(self.kept)

    @property
    def dropped_count(self) -> int:
        return self.input_count - len(self.kept)

    def to_dict(self) -> Dict:
        return {
            "kept": self.kept_count,
            "dropped": self.dropped_count,
            "required": self.required,
        }


def term_postings(index: InvertedIndex, term: str) -> List[int]:
    """属性词倒排表 ∪ 同名标题词倒排表"""
    _, value = split_term(term)
    return union_sorted([index.postings(term), index.postings(value)])


def matching_items(index: InvertedIndex, required: Sequence[str]) -> List[int]:
    """同时满足全部必选词的商品（升序）"""
    return intersect_sorted([term_postings(index, t) for t in required])


def filter_results(ann_results: Sequence[int], required: Sequence[str], index: InvertedIndex) -> FilterResult:
    """
    Args:
        ann_results: ANN 检索结果（按分数排序）
        required: 必选词项，为空时直接放行
        index: 倒排索引
    """
    ann_results = [int(i) for i in ann_results]
    if not required:
        return FilterResult(kept=ann_results, required=[], input_count=len(ann_results))
    allowed = set(matching_items(index, required))
    kept = [i for i in ann_results if i in allowed]
    logger.debug(f"[过滤] 必选词 {list(required)}: 保留 {len(kept)}/{len(ann_results)}")
    return FilterResult(kept=kept, required=list(required), input_count=len(ann_results))
