# coding=utf-8
"""
用户塔

行为嵌入 → 三种时间跨度的表示 → [CLS] 融合：
    H_real  = 查询注意力(Q_mgs, [0; MHA(LSTM(R))])
    H_short = 查询注意力(Q_mgs, [0; MHA(S)])
    H_long  = Σ_a 查询注意力(Q_mgs, [0, h_click, h_buy, h_collect]_a)
    H_qu    = Transformer([CLS]; Q_mgs; H_real; H_short; H_long)[0]

所有查询注意力都在最前面拼接一行零向量，该行永不被掩码，
没有相关行为时注意力可以落在零行上。
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from shopradar.core.config import ModelConfig
from shopradar.core.errors import ShapeError
from shopradar.corpus.models import ACTIONS, ATTRIBUTES
from shopradar.numerics import (
    LSTM,
    Linear,
    MultiHeadSelfAttention,
    ParameterSet,
    Tensor,
    TransformerEncoderLayer,
    attention,
    concat,
    embedding,
    masked_mean,
    take,
    uniform_embedding,
)
from shopradar.numerics.tensor import reshape


@dataclass
class FeatureTables:
    """商品 id → 侧信息 id 的查表数组（均为 id+1，0 号行为 OOV/补齐）"""

    item_leaf: np.ndarray
    item_category: np.ndarray
    item_brand: np.ndarray
    item_shop: np.ndarray

    def lookup(self, item_ids: np.ndarray) -> Dict[str, np.ndarray]:
        """item_ids 为原始 id（补齐位置为 -1）"""
        valid = item_ids >= 0
        safe = np.where(valid, item_ids, 0)
        return {
            "item": np.where(valid, item_ids + 1, 0),
            "leaf": np.where(valid, self.item_leaf[safe] + 1, 0),
            "category": np.where(valid, self.item_category[safe] + 1, 0),
            "brand": np.where(valid, self.item_brand[safe] + 1, 0),
            "shop": np.where(valid, self.item_shop[safe] + 1, 0),
        }


@dataclass
class BehaviorBatch:
    """
    一批用户的行为下标

    realtime / short: [B, T] 商品 id（补齐为 -1）与掩码；
    long: {(attribute, action): ([B, L] 属性 id，补齐为 -1, 掩码)}
    """

    realtime: np.ndarray
    realtime_mask: np.ndarray
    short: np.ndarray
    short_mask: np.ndarray
    long: Dict[Tuple[str, str], Tuple[np.ndarray, np.ndarray]]

    @property
    def size(self) -> int:
        return self.realtime.shape[0]


def _pad(rows: List[List[int]]) -> Tuple[np.ndarray, np.ndarray]:
    width = max([len(r) for r in rows] + [0])
    ids = np.full((len(rows), width), -1, dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=bool)
    for i, row in enumerate(rows):
        if row:
            ids[i, :len(row)] = row
            mask[i, :len(row)] = True
    return ids, mask


def encode_behaviors(users: List, config: ModelConfig) -> BehaviorBatch:
    """
    把 UserLog 列表转换为补齐后的下标（None 表示冷启动用户）

    序列按上限截断，保留最新部分。
    """
    def cap(seq, n):
        return list(seq[-n:]) if n > 0 else []

    realtime, real_mask = _pad([cap(u.realtime_seq, config.max_realtime) if u else [] for u in users])
    short, short_mask = _pad([cap(u.short_seq, config.max_short) if u else [] for u in users])
    long = {}
    for attr in ATTRIBUTES:
        for act in ACTIONS:
            long[(attr, act)] = _pad([cap(u.long_seq(attr, act), config.max_long) if u else [] for u in users])
    return BehaviorBatch(realtime, real_mask, short, short_mask, long)


def query_attention(q_mgs: Tensor, values: Tensor, mask: np.ndarray, scaled: bool) -> Tuple[Tensor, np.ndarray]:
    """
    零注意力：在 values 前拼接零行后做 softmax(Q V^T) V

    Args:
        q_mgs: [B, 6, d]
        values: [B, T, d]（T 可为 0）
        mask: [B, T] 有效位置

    Returns:
        ([B, 6, d], 权重 [B, 6, T+1])
    """
    b, _, d = q_mgs.shape
    zero = Tensor(np.zeros((b, 1, d), dtype=q_mgs.dtype))
    padded = concat([zero, values], axis=1) if values.shape[1] else zero
    key_mask = np.concatenate([np.ones((b, 1), dtype=bool), mask], axis=1)[:, None, :]
    return attention(q_mgs, padded, padded, key_mask=key_mask, scaled=scaled)


class BehaviorEmbedder:
    """
    行为商品嵌入：各特征表查表后拼接，再线性投影到 d

    特征宽度默认 item 0.5d，其余各 0.125d。
    """

    def __init__(self, params: ParameterSet, config: ModelConfig, sizes: Dict[str, int],
                 rng: np.random.Generator):
        self.widths = config.resolved_widths()
        self.tables = {
            f: params.add(f"user.feat.{f}", uniform_embedding((sizes[f] + 1, self.widths[f]), rng))
            for f in ModelConfig.FEATURES
        }
        self.proj = Linear(params, "user.feat.proj", sum(self.widths.values()), config.dim, rng, bias=False)

    def __call__(self, feature_ids: Dict[str, np.ndarray]) -> Tensor:
        parts = [embedding(self.tables[f], feature_ids[f]) for f in ModelConfig.FEATURES]
        return self.proj(concat(parts, axis=-1))


class UserTower:
    """用户塔参数与前向"""

    ATTR_FEATURE = {"item": "item", "shop": "shop", "leaf": "leaf", "brand": "brand"}

    def __init__(self, params: ParameterSet, config: ModelConfig, sizes: Dict[str, int],
                 features: FeatureTables, rng: np.random.Generator):
        d = config.dim
        self.config = config
        self.features = features
        self.embedder = BehaviorEmbedder(params, config, sizes, rng)
        self.lstm = LSTM(params, "user.lstm", d, config.lstm_layers, config.lstm_dropout, rng)
        self.real_attn = MultiHeadSelfAttention(params, "user.real_attn", d, config.heads, rng,
                                                scaled=config.self_attention_scaled)
        self.short_attn = MultiHeadSelfAttention(params, "user.short_attn", d, config.heads, rng,
                                                 scaled=config.self_attention_scaled)
        widths = self.embedder.widths
        self.long_proj = {
            attr: Linear(params, f"user.long.{attr}", widths[feat], d, rng, bias=False)
            for attr, feat in self.ATTR_FEATURE.items()
        }
        self.cls = params.add("user.fusion.cls", uniform_embedding((1, d), rng))
        self.fusion = TransformerEncoderLayer(params, "user.fusion", d, config.heads, config.ffn_mult, rng,
                                              scaled=config.self_attention_scaled)
        self.last_weights: Dict[str, np.ndarray] = {}

    # =====================
    # 各时间跨度
    # =====================

    def embed_items(self, item_ids: np.ndarray) -> Tensor:
        """[B, T] 商品 id（补齐 -1）→ [B, T, d]"""
        return self.embedder(self.features.lookup(item_ids))

    def realtime_repr(self, q_mgs: Tensor, items: np.ndarray, mask: np.ndarray,
                      rng: Optional[np.random.Generator] = None, training: bool = False) -> Tensor:
        b, _, d = q_mgs.shape
        if items.shape[1] == 0 or not mask.any():
            values = Tensor(np.zeros((b, 0, d), dtype=q_mgs.dtype))
            mask = np.zeros((b, 0), dtype=bool)
        else:
            seq = self.embed_items(items)
            hidden = self.lstm(seq, rng, training)
            values = self.real_attn(hidden, mask)
        out, self.last_weights["realtime"] = query_attention(q_mgs, values, mask, self.config.query_attention_scaled)
        return out

    def shortterm_repr(self, q_mgs: Tensor, items: np.ndarray, mask: np.ndarray) -> Tensor:
        b, _, d = q_mgs.shape
        if items.shape[1] == 0 or not mask.any():
            values = Tensor(np.zeros((b, 0, d), dtype=q_mgs.dtype))
            mask = np.zeros((b, 0), dtype=bool)
        else:
            values = self.short_attn(self.embed_items(items), mask)
        out, self.last_weights["short"] = query_attention(q_mgs, values, mask, self.config.query_attention_scaled)
        return out

    def longterm_repr(self, q_mgs: Tensor, long: Dict[Tuple[str, str], Tuple[np.ndarray, np.ndarray]]) -> Tensor:
        """每个属性：动作序列均值池化为 h_click/h_buy/collect，拼接零行后做查询注意力，再对属性求和"""
        b, _, d = q_mgs.shape
        total: Optional[Tensor] = None
        for attr, feat in self.ATTR_FEATURE.items():
            pooled = []
            row_mask = []
            for act in ACTIONS:
                ids, mask = long[(attr, act)]
                if ids.shape[1] == 0:
                    ids = np.full((b, 1), -1, dtype=np.int64)
                    mask = np.zeros((b, 1), dtype=bool)
                emb = embedding(self.embedder.tables[feat], np.where(mask, ids + 1, 0))
                pooled.append(reshape(masked_mean(emb, mask, axis=1), (b, 1, emb.shape[-1])))
                row_mask.append(mask.any(axis=1))
            values = self.long_proj[attr](concat(pooled, axis=1))
            out, self.last_weights[f"long.{attr}"] = query_attention(
                q_mgs, values, np.stack(row_mask, axis=1), self.config.query_attention_scaled
            )
            total = out if total is None else total + out
        return total

    def fuse(self, q_mgs: Tensor, h_real: Tensor, h_short: Tensor, h_long: Tensor) -> Tensor:
        """[CLS] + 24 行 → 编码层 → 取 [CLS] 位置输出，得到 [B, d]"""
        shapes = {q_mgs.shape, h_real.shape, h_short.shape, h_long.shape}
        if len(shapes) != 1:
            raise ShapeError(f"融合输入形状不一致: {sorted(shapes)}")
        b, rows, d = q_mgs.shape
        stacked = concat([q_mgs, h_real, h_short, h_long], axis=1)
        if self.config.fusion == "mean":
            return stacked.mean(axis=1)
        cls = reshape(self.cls, (1, 1, d)) + Tensor(np.zeros((b, 1, d), dtype=q_mgs.dtype))
        out = self.fusion(concat([cls, stacked], axis=1))
        return take(out, 0, axis=1)

    def __call__(self, q_mgs: Tensor, behaviors: BehaviorBatch,
                 rng: Optional[np.random.Generator] = None, training: bool = False) -> Tensor:
        if behaviors.size != q_mgs.shape[0]:
            raise ShapeError(f"行为批大小 {behaviors.size} 与 query 批大小 {q_mgs.shape[0]} 不一致")
        h_real = self.realtime_repr(q_mgs, behaviors.realtime, behaviors.realtime_mask, rng, training)
        h_short = self.shortterm_repr(q_mgs, behaviors.short, behaviors.short_mask)
        h_long = self.longterm_repr(q_mgs, behaviors.long)
        return self.fuse(q_mgs, h_real, h_short, h_long)
