# coding=utf-8
"""
语料数据模型

定义商品、用户日志、query、点击记录与内存语料容器，
每个记录类型都提供 to_dict / from_dict，对应 JSONL 文件中的一行。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set

import numpy as np

ACTIONS = ("click", "buy", "collect")
ATTRIBUTES = ("item", "shop", "leaf", "brand")


@dataclass
class Item:
    """商品"""

    item_id: int
    title_tokens: List[int]             # 标题 token id 列表
    category: int                       # 一级类目 id
    leaf_category: int                  # 叶子类目 id
    brand: int                          # 品牌 id
    shop: int                           # 店铺 id

    def to_dict(self) -> Dict[str, Any]:
        return {
            "item_id": self.item_id,
            "title_tokens": self.title_tokens,
            "category": self.category,
            "leaf_category": self.leaf_category,
            "brand": self.brand,
            "shop": self.shop,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Item":
        return cls(
            item_id=int(data["item_id"]),
            title_tokens=[int(t) for t in data["title_tokens"]],
            category=int(data["category"]),
            leaf_category=int(data["leaf_category"]),
            brand=int(data["brand"]),
            shop=int(data["shop"]),
        )


@dataclass
class UserLog:
    """
    用户行为日志（三种时间跨度）

    序列均按时间从旧到新排列；realtime 最新，其次 short，再次 long。
    long_attr_seqs 形如 {"item": {"click": [...], "buy": [...], "collect": [...]}, "shop": {...}, ...}
    """

    user_id: int
    realtime_seq: List[int] = field(default_factory=list)
    short_seq: List[int] = field(default_factory=list)
    long_attr_seqs: Dict[str, Dict[str, List[int]]] = field(default_factory=dict)
    historical_queries: List[List[int]] = field(default_factory=list)
    preferred_categories: List[int] = field(default_factory=list)

    def long_seq(self, attribute: str, action: str) -> List[int]:
        return self.long_attr_seqs.get(attribute, {}).get(action, [])

    def truncate(self, max_realtime: int, max_short: int, max_long: int, max_queries: int) -> "UserLog":
        """按上限截断（保留最新的部分）"""
        def tail(seq: List, cap: int) -> List:
            return list(seq[-cap:]) if cap > 0 else []

        return UserLog(
            user_id=self.user_id,
            realtime_seq=tail(self.realtime_seq, max_realtime),
            short_seq=tail(self.short_seq, max_short),
            long_attr_seqs={
                attr: {act: tail(self.long_seq(attr, act), max_long) for act in ACTIONS}
                for attr in ATTRIBUTES
            },
            historical_queries=tail(self.historical_queries, max_queries),
            preferred_categories=list(self.preferred_categories),
        )

    @classmethod
    def cold(cls, user_id: int) -> "UserLog":
        """冷启动用户：没有任何行为"""
        return cls(user_id=user_id, long_attr_seqs={a: {act: [] for act in ACTIONS} for a in ATTRIBUTES})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user_id": self.user_id,
            "realtime_seq": self.realtime_seq,
            "short_seq": self.short_seq,
            "long_attr_seqs": self.long_attr_seqs,
            "historical_queries": self.historical_queries,
            "preferred_categories": self.preferred_categories,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UserLog":
        long_raw = data.get("long_attr_seqs", {}) or {}
        return cls(
            user_id=int(data["user_id"]),
            realtime_seq=[int(x) for x in data.get("realtime_seq", [])],
            short_seq=[int(x) for x in data.get("short_seq", [])],
            long_attr_seqs={
                attr: {act: [int(x) for x in long_raw.get(attr, {}).get(act, [])] for act in ACTIONS}
                for attr in ATTRIBUTES
            },
            historical_queries=[[int(t) for t in q] for q in data.get("historical_queries", [])],
            preferred_categories=[int(c) for c in data.get("preferred_categories", [])],
        )


@dataclass
class Query:
    """搜索 query"""

    query_id: int
    tokens: List[int]                   # 分词后的 token id（含类目词）
    text: str                           # 空格分隔的原文
    category: int                       # 意图类目
    source_item: int = -1               # 生成该 query 的目标商品

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query_id": self.query_id,
            "tokens": self.tokens,
            "text": self.text,
            "category": self.category,
            "source_item": self.source_item,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Query":
        return cls(
            query_id=int(data["query_id"]),
            tokens=[int(t) for t in data["tokens"]],
            text=str(data["text"]),
            category=int(data["category"]),
            source_item=int(data.get("source_item", -1)),
        )


@dataclass
class ClickRecord:
    """点击记录：用户 u 在 query q 下点击了商品 i+"""

    user_id: int
    query_id: int
    query_tokens: List[int]
    query_category: int
    clicked_item_id: int
    timestamp: int
    relevance_label: str                # good / bad（生成器埋入的真值）

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user_id": self.user_id,
            "query_id": self.query_id,
            "query_tokens": self.query_tokens,
            "query_category": self.query_category,
            "clicked_item_id": self.clicked_item_id,
            "timestamp": self.timestamp,
            "relevance_label": self.relevance_label,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClickRecord":
        label = str(data["relevance_label"])
        if label not in ("good", "bad"):
            raise ValueError(f"relevance_label 只能是 good/bad，当前 {label}")
        return cls(
            user_id=int(data["user_id"]),
            query_id=int(data["query_id"]),
            query_tokens=[int(t) for t in data["query_tokens"]],
            query_category=int(data["query_category"]),
            clicked_item_id=int(data["clicked_item_id"]),
            timestamp=int(data["timestamp"]),
            relevance_label=label,
        )


@dataclass
class PurchaseRecord:
    """站外购买记录（与 query 相关但未在搜索中成交）"""

    user_id: int
    query_id: int
    item_id: int
    timestamp: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user_id": self.user_id,
            "query_id": self.query_id,
            "item_id": self.item_id,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PurchaseRecord":
        return cls(
            user_id=int(data["user_id"]),
            query_id=int(data["query_id"]),
            item_id=int(data["item_id"]),
            timestamp=int(data["timestamp"]),
        )


@dataclass
class Catalog:
    """id → 名称表"""

    categories: List[str] = field(default_factory=list)
    leaf_categories: List[str] = field(default_factory=list)
    brands: List[str] = field(default_factory=list)
    shops: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "categories": self.categories,
            "leaf_categories": self.leaf_categories,
            "brands": self.brands,
            "shops": self.shops,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Catalog":
        return cls(
            categories=list(data.get("categories", [])),
            leaf_categories=list(data.get("leaf_categories", [])),
            brands=list(data.get("brands", [])),
            shops=list(data.get("shops", [])),
        )


@dataclass
class Corpus:
    """
    内存语料（加载后只读）

    items 按 item_id 升序排列且 item_id 连续从 0 开始。
    """

    items: List[Item]
    users: Dict[int, UserLog]
    queries: Dict[int, Query]
    train_clicks: List[ClickRecord]
    test_clicks: List[ClickRecord]
    purchases_aux: List[PurchaseRecord]
    vocab: List[str]
    catalog: Catalog
    lexicons: Dict[str, Set[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.token_to_id: Dict[str, int] = {tok: i for i, tok in enumerate(self.vocab)}
        self.item_category = np.array([it.category for it in self.items], dtype=np.int64)
        self.item_leaf = np.array([it.leaf_category for it in self.items], dtype=np.int64)
        self.item_brand = np.array([it.brand for it in self.items], dtype=np.int64)
        self.item_shop = np.array([it.shop for it in self.items], dtype=np.int64)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def item(self, item_id: int) -> Item:
        return self.items[item_id]

    def user(self, user_id: int) -> Optional[UserLog]:
        return self.users.get(user_id)

    def token_text(self, token_id: int) -> str:
        return self.vocab[token_id] if 0 <= token_id < len(self.vocab) else self.vocab[0]

    def tokens_text(self, token_ids: List[int]) -> str:
        return " ".join(self.token_text(t) for t in token_ids)

    def stats(self) -> Dict[str, int]:
        return {
            "items": len(self.items),
            "users": len(self.users),
            "queries": len(self.queries),
            "train_clicks": len(self.train_clicks),
            "test_clicks": len(self.test_clicks),
            "purchases_aux": len(self.purchases_aux),
            "vocab": len(self.vocab),
        }
