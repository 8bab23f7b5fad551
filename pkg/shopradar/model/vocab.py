# coding=utf-8
"""
分词与词表

- tokenize: 空白切分为片段，片段再拆为 unicode 字符，统一小写
- Vocab: 片段 token → id、字符 → id、相邻字符对 → 哈希桶
- encode_queries: 把一批 query（含历史 query）转换为补齐后的下标数组
"""

import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from shopradar.core.errors import InvalidParameterError

OOV_ID = 0


@dataclass
class Segment:
    """分词片段 w 及其字符 c_1..c_m"""

    text: str
    chars: List[str]


def tokenize(query: str) -> List[Segment]:
    """
    query 分词

    Args:
        query: 原始文本

    Returns:
        片段列表

    Raises:
        InvalidParameterError: 空 query

    Examples:
        >>> [s.text for s in tokenize("Red Dress")]
        ['red', 'dress']
        >>> tokenize("red")[0].chars
        ['r', 'e', 'd']
    """
    if query is None or not query.strip():
        raise InvalidParameterError("query 不能为空", suggestion="请输入至少一个词")
    return [Segment(text=w, chars=list(w)) for w in query.lower().split()]


def pad_ids(rows: Sequence[Sequence[int]], min_len: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """变长下标右侧补 0，返回 (ids, mask)"""
    width = max([len(r) for r in rows] + [min_len])
    ids = np.zeros((len(rows), width), dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=bool)
    for i, row in enumerate(rows):
        if len(row):
            ids[i, :len(row)] = row
            mask[i, :len(row)] = True
    return ids, mask


@dataclass
class QueryBatch:
    """
    一批 query 的补齐下标

    Attributes:
        chars: [B, Lc] 全部字符
        bigrams: [B, Lb] 2-gram 哈希桶（单字符片段处为 0）
        bigram_chars: [B, Lb] 单字符片段退化时使用的字符 id（其余为 0）
        bigram_is_char: [B, Lb] 是否退化为单字符
        segments: [B, Ls] 片段 token id
        history: [B, K, Lh] 历史 query 的 token id
        history_mask: [B, K] 历史 query 是否存在
    """

    chars: np.ndarray
    chars_mask: np.ndarray
    bigrams: np.ndarray
    bigram_chars: np.ndarray
    bigram_is_char: np.ndarray
    bigrams_mask: np.ndarray
    segments: np.ndarray
    segments_mask: np.ndarray
    history: np.ndarray
    history_token_mask: np.ndarray
    history_mask: np.ndarray

    @property
    def size(self) -> int:
        return self.chars.shape[0]


class Vocab:
    """
    片段 / 字符 / 2-gram 词表

    Args:
        tokens: 片段词表（下标即 id，0 号为 OOV）
        ngram_buckets: 2-gram 哈希桶数（0 号桶保留为补齐位）
    """

    def __init__(self, tokens: Sequence[str], ngram_buckets: int = 65536):
        self.tokens = list(tokens)
        self.token_to_id: Dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            self.token_to_id.setdefault(tok.lower(), i)
        chars = sorted({c for tok in self.tokens[1:] for c in tok.lower()})
        self.char_to_id: Dict[str, int] = {c: i + 1 for i, c in enumerate(chars)}
        self.ngram_buckets = ngram_buckets

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    @property
    def n_chars(self) -> int:
        return len(self.char_to_id) + 1

    def token_id(self, token: str) -> int:
        return self.token_to_id.get(token.lower(), OOV_ID)

    def char_id(self, char: str) -> int:
        return self.char_to_id.get(char, OOV_ID)

    def bigram_bucket(self, pair: str) -> int:
        """crc32 哈希到 [1, buckets)"""
        return 1 + zlib.crc32(pair.encode("utf-8")) % (self.ngram_buckets - 1)

    def text_of(self, token_ids: Sequence[int]) -> str:
        return " ".join(self.tokens[t] if 0 <= t < len(self.tokens) else self.tokens[0] for t in token_ids)

    # =====================
    # 编码
    # =====================

    def _encode_one(self, segments: List[Segment]):
        chars: List[int] = []
        bigrams: List[int] = []
        bigram_chars: List[int] = []
        is_char: List[bool] = []
        for seg in segments:
            chars.extend(self.char_id(c) for c in seg.chars)
            if len(seg.chars) == 1:
                bigrams.append(0)
                bigram_chars.append(self.char_id(seg.chars[0]))
                is_char.append(True)
            else:
                for a, b in zip(seg.chars[:-1], seg.chars[1:]):
                    bigrams.append(self.bigram_bucket(a + b))
                    bigram_chars.append(0)
                    is_char.append(False)
        seg_ids = [self.token_id(s.text) for s in segments]
        return chars, bigrams, bigram_chars, is_char, seg_ids

    def encode_queries(
        self,
        queries: Sequence[str],
        histories: Optional[Sequence[Sequence[str]]] = None,
        max_history: int = 4,
    ) -> QueryBatch:
        """
        编码一批 query

        Args:
            queries: query 文本
            histories: 每个 query 对应用户的历史 query 文本（最多取最新 max_history 条）
            max_history: 历史 query 上限 k
        """
        encoded = [self._encode_one(tokenize(q)) for q in queries]
        chars, chars_mask = pad_ids([e[0] for e in encoded])
        bigrams, bigrams_mask = pad_ids([e[1] for e in encoded])
        bigram_chars, _ = pad_ids([e[2] for e in encoded])
        is_char_rows = [[int(x) for x in e[3]] for e in encoded]
        bigram_is_char, _ = pad_ids(is_char_rows)
        segments, segments_mask = pad_ids([e[4] for e in encoded])

        b = len(queries)
        histories = histories or [[] for _ in range(b)]
        hist_ids: List[List[List[int]]] = []
        for hist in histories:
            rows = []
            for text in list(hist)[-max_history:] if max_history > 0 else []:
                if text and text.strip():
                    rows.append([self.token_id(s.text) for s in tokenize(text)])
            hist_ids.append(rows)
        k = max([len(h) for h in hist_ids] + [1])
        lh = max([len(r) for h in hist_ids for r in h] + [1])
        history = np.zeros((b, k, lh), dtype=np.int64)
        history_token_mask = np.zeros((b, k, lh), dtype=bool)
        history_mask = np.zeros((b, k), dtype=bool)
        for i, rows in enumerate(hist_ids):
            for j, row in enumerate(rows):
                history[i, j, :len(row)] = row
                history_token_mask[i, j, :len(row)] = True
                history_mask[i, j] = True

        return QueryBatch(
            chars=chars,
            chars_mask=chars_mask,
            bigrams=bigrams,
            bigram_chars=bigram_chars,
            bigram_is_char=bigram_is_char.astype(bool),
            bigrams_mask=bigrams_mask,
            segments=segments,
            segments_mask=segments_mask,
            history=history,
            history_token_mask=history_token_mask,
            history_mask=history_mask,
        )
