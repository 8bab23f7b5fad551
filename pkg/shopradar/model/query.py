# coding=utf-8
"""
多粒度语义单元

把 query 编码为 6×d 的 Q_mgs：
    q_1gram    字符嵌入均值
    q_2gram    相邻字符对嵌入均值（单字符片段退化为该字符的嵌入）
    q_seg      片段嵌入均值
    q_seg_seq  片段序列经一层 Transformer 编码后的输出均值
    q_his_seq  q_seg 对历史 query 向量的注意力（无历史时为零向量）
    q_mix      前五者之和
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from shopradar.core.config import ModelConfig
from shopradar.model.vocab import QueryBatch
from shopradar.numerics import (
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

MGS_ROWS = ("q_1gram", "q_2gram", "q_seg", "q_seg_seq", "q_his_seq", "q_mix")


@dataclass
class QuerySemantics:
    """
    一批 query 的多粒度表示

    rows: 各粒度 [B, d]；q_mgs: [B, 6, d]；his_weights: 历史注意力权重 [B, 1, K]
    """

    rows: Dict[str, Tensor]
    q_mgs: Tensor
    his_weights: np.ndarray

    def row(self, name: str) -> Tensor:
        return self.rows[name]


class QueryEncoder:
    """
    多粒度语义单元的参数与前向计算

    片段嵌入表 query.token 与商品标题共用。
    """

    def __init__(self, params: ParameterSet, config: ModelConfig, n_tokens: int, n_chars: int,
                 rng: np.random.Generator):
        d = config.dim
        self.config = config
        self.token_emb = params.add("query.token", uniform_embedding((n_tokens, d), rng))
        self.char_emb = params.add("query.char", uniform_embedding((n_chars, d), rng))
        self.bigram_emb = params.add("query.bigram", uniform_embedding((config.ngram_buckets, d), rng))
        self.seg_encoder = TransformerEncoderLayer(
            params, "query.trm", d, config.heads, config.ffn_mult, rng, scaled=config.self_attention_scaled
        )

    def history_vectors(self, batch: QueryBatch) -> Tensor:
        """历史 query 先按片段均值池化为 [B, K, d]"""
        emb = embedding(self.token_emb, batch.history)
        return masked_mean(emb, batch.history_token_mask, axis=2)

    def __call__(self, batch: QueryBatch) -> QuerySemantics:
        b = batch.size
        d = self.config.dim

        q_1gram = masked_mean(embedding(self.char_emb, batch.chars), batch.chars_mask, axis=1)

        is_char = batch.bigram_is_char[..., None].astype(self.char_emb.dtype)
        pair_emb = embedding(self.bigram_emb, batch.bigrams) * Tensor(1.0 - is_char) \
            + embedding(self.char_emb, batch.bigram_chars) * Tensor(is_char)
        q_2gram = masked_mean(pair_emb, batch.bigrams_mask, axis=1)

        seg_emb = embedding(self.token_emb, batch.segments)
        q_seg = masked_mean(seg_emb, batch.segments_mask, axis=1)

        seg_out = self.seg_encoder(seg_emb, batch.segments_mask)
        q_seg_seq = masked_mean(seg_out, batch.segments_mask, axis=1)

        his = self.history_vectors(batch)
        his_out, his_weights = attention(
            reshape(q_seg, (b, 1, d)), his, his,
            key_mask=batch.history_mask[:, None, :],
            scaled=self.config.query_attention_scaled,
        )
        q_his_seq = reshape(his_out, (b, d))

        q_mix = q_1gram + q_2gram + q_seg + q_seg_seq + q_his_seq
        rows = {
            "q_1gram": q_1gram,
            "q_2gram": q_2gram,
            "q_seg": q_seg,
            "q_seg_seq": q_seg_seq,
            "q_his_seq": q_his_seq,
            "q_mix": q_mix,
        }
        if self.config.use_mgs:
            stacked = [rows[name] for name in MGS_ROWS]
        else:
            stacked = [q_seg] * len(MGS_ROWS)
        q_mgs = concat([reshape(r, (b, 1, d)) for r in stacked], axis=1)
        return QuerySemantics(rows=rows, q_mgs=q_mgs, his_weights=his_weights)


def build_mgs(encoder: QueryEncoder, batch: QueryBatch, index: Optional[int] = None) -> QuerySemantics:
    """
    构建 Q_mgs

    Args:
        encoder: 已初始化的 QueryEncoder
        batch: vocab.encode_queries 的结果
        index: 只取其中一条时的下标（返回 [1, 6, d]）
    """
    sem = encoder(batch)
    if index is None:
        return sem
    pick = np.array([index])
    return QuerySemantics(
        rows={k: take(v, pick, axis=0) for k, v in sem.rows.items()},
        q_mgs=take(sem.q_mgs, pick, axis=0),
        his_weights=sem.his_weights[pick],
    )
