# coding=utf-8
"""
相关性控制模块 - 倒排索引、关键词抽取、布尔过滤
"""

from shopradar.relevance.inverted import (
    InvertedIndex,
    attribute_term,
    build_inverted_index,
    intersect_sorted,
    item_terms,
    union_sorted,
)
from shopradar.relevance.key_terms import PRECEDENCE, KeyTermRule, extract_key_terms, split_term
from shopradar.relevance.filter import FilterResult, filter_results, matching_items, term_postings

__all__ = [
    # 倒排索引
    "InvertedIndex",
    "attribute_term",
    "build_inverted_index",
    "intersect_sorted",
    "item_terms",
    "union_sorted",
    # 关键词
    "PRECEDENCE",
    "KeyTermRule",
    "extract_key_terms",
    "split_term",
    # 过滤
    "FilterResult",
    "filter_results",
    "matching_items",
    "term_postings",
]
