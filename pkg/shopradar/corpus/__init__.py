# coding=utf-8
"""
语料模块 - 合成数据生成、文件格式与相关性真值
"""

from shopradar.corpus.models import (
    ACTIONS,
    ATTRIBUTES,
    Item,
    UserLog,
    Query,
    ClickRecord,
    PurchaseRecord,
    Catalog,
    Corpus,
)
from shopradar.corpus.generator import CorpusGenerator, generate, OOV_TOKEN
from shopradar.corpus.loader import load_corpus, read_lexicons, read_jsonl
from shopradar.corpus.oracle import (
    is_good,
    relevance_labels,
    relevant_set,
    lexical_retrieve,
    lexical_recall,
)

__all__ = [
    "ACTIONS",
    "ATTRIBUTES",
    "Item",
    "UserLog",
    "Query",
    "ClickRecord",
    "PurchaseRecord",
    "Catalog",
    "Corpus",
    # 生成与加载
    "CorpusGenerator",
    "generate",
    "OOV_TOKEN",
    "load_corpus",
    "read_lexicons",
    "read_jsonl",
    # 真值
    "is_good",
    "relevance_labels",
    "relevant_set",
    "lexical_retrieve",
    "lexical_recall",
]
