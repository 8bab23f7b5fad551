# coding=utf-8
"""
商品塔：H_item = e_i + tanh(mean(标题词嵌入) · W_t)

标题 OOV 词映射到 0 号行而不是丢弃，保持均值的分母 N 不变。
"""

import struct
from pathlib import Path
from typing import List, Sequence

import numpy as np

from shopradar.core.errors import DataError, IndexFormatError
from shopradar.model.vocab import pad_ids
from shopradar.numerics import ParameterSet, Tensor, embedding, masked_mean, orthogonal, uniform_embedding
from shopradar.numerics.tensor import matmul


class ItemTower:
    """
    Args:
        params: 参数集合
        token_emb: 与 query 片段共用的标题词表
        n_items: 商品数（id 表多一行 0 号 OOV）
        dim: 嵌入维度 d
    """

    def __init__(self, params: ParameterSet, token_emb: Tensor, n_items: int, dim: int,
                 rng: np.random.Generator):
        self.token_emb = token_emb
        self.id_emb = params.add("item.id", uniform_embedding((n_items + 1, dim), rng))
        self.w_t = params.add("item.w_t", orthogonal((dim, dim), rng))

    def __call__(self, item_ids: np.ndarray, titles: np.ndarray, title_mask: np.ndarray) -> Tensor:
        """
        Args:
            item_ids: [M] 商品 id
            titles: [M, L] 标题 token id（补齐为 0）
            title_mask: [M, L]

        Returns:
            [M, d]
        """
        if not np.all(title_mask.any(axis=1)):
            empty = int(np.asarray(item_ids)[~title_mask.any(axis=1)][0])
            raise DataError(f"商品 {empty} 标题为空", code="EMPTY_TITLE")
        e = embedding(self.id_emb, np.asarray(item_ids) + 1)
        title = masked_mean(embedding(self.token_emb, titles), title_mask, axis=1)
        return e + matmul(title, self.w_t).tanh()


def encode_titles(title_tokens: Sequence[Sequence[int]], n_tokens: int) -> tuple:
    """标题 token 补齐；越界 id 视为 OOV(0)"""
    cleaned: List[List[int]] = [[t if 0 <= t < n_tokens else 0 for t in row] for row in title_tokens]
    return pad_ids(cleaned, min_len=1)


# =====================
# 嵌入文件
# =====================

EMBEDDING_MAGIC = b"MGE1"


def write_embeddings(path: str, matrix: np.ndarray) -> None:
    """MGE1 格式：魔数, u32 行数 M, u32 维度 d, M·d 个小端 f32"""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise DataError(f"嵌入矩阵必须是二维，当前 {matrix.shape}", code="INDEX_FORMAT_ERROR")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(EMBEDDING_MAGIC)
        f.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        f.write(matrix.tobytes())


def read_embeddings(path: str) -> np.ndarray:
    """
    读取 MGE1 嵌入文件

    Raises:
        IndexFormatError: 文件缺失、魔数错误或长度不符
    """
    if not Path(path).exists():
        raise IndexFormatError(f"嵌入文件不存在: {path}")
    raw = Path(path).read_bytes()
    if raw[:4] != EMBEDDING_MAGIC or len(raw) < 12:
        raise IndexFormatError(f"嵌入文件魔数错误: {raw[:4]!r}")
    count, dim = struct.unpack_from("<II", raw, 4)
    expected = 12 + 4 * count * dim
    if len(raw) != expected:
        raise IndexFormatError(f"嵌入文件长度 {len(raw)} 与头部声明的 {count}×{dim} 不符")
    return np.frombuffer(raw, dtype="<f4", offset=12).reshape(count, dim).astype(np.float32)
