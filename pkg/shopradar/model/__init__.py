# coding=utf-8
"""
模型模块 - 分词、多粒度语义单元、用户塔、商品塔
"""

from shopradar.model.vocab import Vocab, Segment, QueryBatch, tokenize, pad_ids, OOV_ID
from shopradar.model.query import QueryEncoder, QuerySemantics, build_mgs, MGS_ROWS
from shopradar.model.user_tower import (
    BehaviorBatch,
    BehaviorEmbedder,
    FeatureTables,
    UserTower,
    encode_behaviors,
    query_attention,
)
from shopradar.model.item_tower import ItemTower, encode_titles, write_embeddings, read_embeddings
from shopradar.model.towers import ModelSizes, TwoTowerModel, score

__all__ = [
    # 分词
    "Vocab",
    "Segment",
    "QueryBatch",
    "tokenize",
    "pad_ids",
    "OOV_ID",
    # query
    "QueryEncoder",
    "QuerySemantics",
    "build_mgs",
    "MGS_ROWS",
    # 用户塔
    "BehaviorBatch",
    "BehaviorEmbedder",
    "FeatureTables",
    "UserTower",
    "encode_behaviors",
    "query_attention",
    # 商品塔
    "ItemTower",
    "encode_titles",
    "write_embeddings",
    "read_embeddings",
    # 双塔
    "ModelSizes",
    "TwoTowerModel",
    "score",
]
