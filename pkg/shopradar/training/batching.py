# coding=utf-8
"""
训练批构造

每个批次包含 B 条点击样本，以及一组所有样本共用的随机负样本 id（从商品池均匀无放回抽样）。
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from shopradar.corpus.models import ClickRecord, Corpus, UserLog

logger = logging.getLogger(__name__)


@dataclass
class TrainBatch:
    """一个训练批"""

    clicks: List[ClickRecord]
    queries: List[str]                  # query 文本
    users: List[Optional[UserLog]]
    pos_ids: np.ndarray                 # [B]
    neg_ids: np.ndarray                 # [S]，批内所有样本共享

    @property
    def size(self) -> int:
        return len(self.clicks)


class BatchSampler:
    """
    按 epoch 打乱训练点击并切分为批

    Args:
        corpus: 已加载语料
        batch_size: 批大小 B
        shared_negatives: 共享负样本数 S（商品数不足时取全部商品）
        rng: 打乱与负采样共用的随机源
    """

    def __init__(self, corpus: Corpus, batch_size: int, shared_negatives: int, rng: np.random.Generator):
        self.corpus = corpus
        self.batch_size = batch_size
        self.rng = rng
        self.shared_negatives = min(shared_negatives, corpus.n_items)
        if self.shared_negatives < shared_negatives:
            logger.warning(f"[训练] 商品数 {corpus.n_items} 小于共享负样本数 {shared_negatives}，改为使用全部商品")

    def sample_negatives(self) -> np.ndarray:
        return self.rng.choice(self.corpus.n_items, size=self.shared_negatives, replace=False).astype(np.int64)

    def make_batch(self, clicks: List[ClickRecord]) -> TrainBatch:
        return TrainBatch(
            clicks=clicks,
            queries=[self.corpus.tokens_text(c.query_tokens) for c in clicks],
            users=[self.corpus.user(c.user_id) for c in clicks],
            pos_ids=np.array([c.clicked_item_id for c in clicks], dtype=np.int64),
            neg_ids=self.sample_negatives(),
        )

    def epoch(self) -> Iterator[TrainBatch]:
        clicks = self.corpus.train_clicks
        order = self.rng.permutation(len(clicks))
        for start in range(0, len(order), self.batch_size):
            yield self.make_batch([clicks[i] for i in order[start:start + self.batch_size]])
