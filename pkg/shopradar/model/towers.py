# coding=utf-8
"""
双塔模型

把 QueryEncoder、UserTower、ItemTower 组装在同一个 ParameterSet 上，
负责从语料构建特征表、编码 (用户, query) 与商品、导出全部商品嵌入，
以及检查点的保存与加载。
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from shopradar.core.config import ModelConfig
from shopradar.core.errors import DataError
from shopradar.corpus.models import Corpus, UserLog
from shopradar.model.item_tower import ItemTower, encode_titles, write_embeddings
from shopradar.model.query import QueryEncoder, QuerySemantics
from shopradar.model.user_tower import BehaviorBatch, FeatureTables, UserTower, encode_behaviors
from shopradar.model.vocab import Vocab
from shopradar.numerics import ParameterSet, Tensor, dot, load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)


@dataclass
class ModelSizes:
    """各嵌入表大小"""

    n_tokens: int
    n_chars: int
    n_items: int
    n_leaf: int
    n_categories: int
    n_brands: int
    n_shops: int

    @classmethod
    def from_corpus(cls, corpus: Corpus, vocab: Vocab) -> "ModelSizes":
        def size(names: List[str], values: np.ndarray) -> int:
            observed = int(values.max()) + 1 if values.size else 0
            return max(len(names), observed, 1)

        return cls(
            n_tokens=vocab.n_tokens,
            n_chars=vocab.n_chars,
            n_items=corpus.n_items,
            n_leaf=size(corpus.catalog.leaf_categories, corpus.item_leaf),
            n_categories=size(corpus.catalog.categories, corpus.item_category),
            n_brands=size(corpus.catalog.brands, corpus.item_brand),
            n_shops=size(corpus.catalog.shops, corpus.item_shop),
        )

    def feature_sizes(self) -> Dict[str, int]:
        return {
            "item": self.n_items,
            "leaf": self.n_leaf,
            "category": self.n_categories,
            "brand": self.n_brands,
            "shop": self.n_shops,
        }


def score(h_qu: Tensor, h_item: Tensor) -> Tensor:
    """内积打分 <H_qu, H_item>"""
    return dot(h_qu, h_item)


class TwoTowerModel:
    """
    双塔模型

    Args:
        config: 模型结构配置
        sizes: 嵌入表大小
        vocab: 词表
        features: 商品侧信息查表
        titles / title_mask: 全部商品的补齐标题
        seed: 参数初始化种子
    """

    def __init__(self, config: ModelConfig, sizes: ModelSizes, vocab: Vocab, features: FeatureTables,
                 titles: np.ndarray, title_mask: np.ndarray, seed: int = 42):
        config.validate()
        self.config = config
        self.sizes = sizes
        self.vocab = vocab
        self.features = features
        self.titles = titles
        self.title_mask = title_mask
        self.params = ParameterSet()
        rng = np.random.default_rng(seed)
        self.query = QueryEncoder(self.params, config, sizes.n_tokens, sizes.n_chars, rng)
        self.user = UserTower(self.params, config, sizes.feature_sizes(), features, rng)
        self.item = ItemTower(self.params, self.query.token_emb, sizes.n_items, config.dim, rng)

    @classmethod
    def from_corpus(cls, corpus: Corpus, config: ModelConfig, seed: int = 42) -> "TwoTowerModel":
        vocab = Vocab(corpus.vocab, config.ngram_buckets)
        sizes = ModelSizes.from_corpus(corpus, vocab)
        features = FeatureTables(
            item_leaf=corpus.item_leaf,
            item_category=corpus.item_category,
            item_brand=corpus.item_brand,
            item_shop=corpus.item_shop,
        )
        titles, title_mask = encode_titles([it.title_tokens for it in corpus.items], vocab.n_tokens)
        return cls(config, sizes, vocab, features, titles, title_mask, seed)

    # =====================
    # 前向
    # =====================

    def history_texts(self, user: Optional[UserLog]) -> List[str]:
        if user is None:
            return []
        return [self.vocab.text_of(q) for q in user.historical_queries if q]

    def encode_semantics(self, queries: Sequence[str], users: Sequence[Optional[UserLog]]) -> QuerySemantics:
        batch = self.vocab.encode_queries(
            queries,
            [self.history_texts(u) for u in users],
        )
        return self.query(batch)

    def encode_users(self, queries: Sequence[str], users: Sequence[Optional[UserLog]],
                     rng: Optional[np.random.Generator] = None, training: bool = False) -> Tensor:
        """
        用户塔前向

        Args:
            queries: query 文本
            users: 与 query 对应的用户日志，None 为冷启动用户

        Returns:
            H_qu [B, d]
        """
        semantics = self.encode_semantics(queries, users)
        behaviors: BehaviorBatch = encode_behaviors(list(users), self.config)
        return self.user(semantics.q_mgs, behaviors, rng, training)

    def encode_items(self, item_ids: Sequence[int]) -> Tensor:
        """商品塔前向，返回 [M, d]"""
        ids = np.asarray(item_ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.sizes.n_items):
            bad = int(ids[(ids < 0) | (ids >= self.sizes.n_items)][0])
            raise DataError(f"商品 id={bad} 不存在", code="DANGLING_REFERENCE")
        titles = self.titles[ids]
        mask = self.title_mask[ids]
        width = max(1, int(mask.sum(axis=1).max())) if ids.size else 1
        return self.item(ids, titles[:, :width], mask[:, :width])

    def item_repr(self, item_id: int) -> Tensor:
        """单个商品的 H_item [1, d]"""
        return self.encode_items([item_id])

    def embed_behavior_item(self, item_id: int) -> Tensor:
        """单个行为商品的嵌入 [1, d]"""
        out = self.user.embed_items(np.array([[item_id]], dtype=np.int64))
        return out.reshape(1, self.config.dim)

    # =====================
    # 导出与检查点
    # =====================

    def export_item_matrix(self) -> np.ndarray:
        """按 item_id 升序导出全部商品嵌入 [M, d]，每行与 item_repr 逐位一致"""
        if not self.sizes.n_items:
            raise DataError("语料中没有商品，无法导出", code="MISSING_ITEMS")
        # 逐个编码：批量矩阵乘的累加顺序随批大小变化
        rows = [self.item_repr(i).data.astype(np.float32) for i in range(self.sizes.n_items)]
        return np.concatenate(rows, axis=0)

    def export_all_items(self, path: str) -> np.ndarray:
        matrix = self.export_item_matrix()
        write_embeddings(path, matrix)
        logger.info(f"[导出] {matrix.shape[0]} 个商品嵌入已写入 {path}")
        return matrix

    def save(self, path: str) -> None:
        save_checkpoint(path, self.params.to_arrays())

    def load(self, path: str) -> "TwoTowerModel":
        self.params.load_arrays(load_checkpoint(path))
        return self

    def describe(self) -> Dict:
        return {
            "config": self.config.to_dict(),
            "sizes": asdict(self.sizes),
            "parameters": self.params.num_values(),
        }
