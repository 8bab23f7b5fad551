# coding=utf-8
"""
多列 ANN 索引

商品按 id 轮询分片到 n 列（id % n），每列独立构建层次聚类树；
检索时每列返回 K/n（向上取整，或配置的 per_column_k；扫描预算覆盖整列时返回 K），
合并后按分数降序、id 升序取全局前 K。
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from shopradar.core.config import IndexConfig, ceil_div, scan_budget
from shopradar.core.errors import IndexFormatError, InvalidParameterError, ShapeError
from shopradar.index.column import Column, ColumnScan, build_column
from shopradar.model.item_tower import read_embeddings
from shopradar.utils.time import elapsed_ms

logger = logging.getLogger(__name__)


@dataclass
class SearchResult:
    """检索结果：分数非增、id 不重复"""

    item_ids: List[int]
    scores: List[float]
    column_latency_ms: List[float] = field(default_factory=list)
    scanned: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "item_ids": self.item_ids,
            "scores": self.scores,
            "column_latency_ms": self.column_latency_ms,
            "scanned": self.scanned,
        }


def column_file(index_dir: str, column: int) -> Path:
    return Path(index_dir) / f"column_{column}.mgx"


def merge_columns(scans: Sequence[ColumnScan], k: int) -> List[tuple]:
    """合并各列候选：分数降序、id 升序，去重后取前 k，返回 [(item_id, score)]"""
    if not scans:
        return []
    ids = np.concatenate([s.item_ids for s in scans])
    scores = np.concatenate([s.scores for s in scans])
    order = np.lexsort((ids, -scores))
    merged = []
    seen = set()
    for i in order:
        item_id = int(ids[i])
        if item_id in seen:
            continue
        seen.add(item_id)
        merged.append((item_id, float(scores[i])))
        if len(merged) == k:
            break
    return merged


class AnnIndex:
    """
    Args:
        columns: 按列号排列的单列索引
        config: 构建时的索引配置
    """

    def __init__(self, columns: List[Column], config: IndexConfig):
        if not columns:
            raise IndexFormatError("索引没有任何列")
        self.columns = columns
        self.config = config

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def dim(self) -> int:
        return self.columns[0].dim

    @property
    def n_items(self) -> int:
        return sum(c.n_items for c in self.columns)

    def per_column_k(self, k: int) -> int:
        if self.config.per_column_k > 0:
            return self.config.per_column_k
        return ceil_div(k, self.n_columns)

    def search(self, query: np.ndarray, k: int, scan_ratio: float = None) -> SearchResult:
        """
        Args:
            query: [d] 用户塔输出
            k: 返回数 K
            scan_ratio: 每列扫描比例，默认取构建配置的 max_scan_ratio

        Raises:
            InvalidParameterError: K < 列数，或 scan_ratio 不在 (0, 1]
            ShapeError: 查询维度不符
        """
        scan_ratio = self.config.max_scan_ratio if scan_ratio is None else scan_ratio
        if k < self.n_columns:
            raise InvalidParameterError(
                f"K={k} 小于列数 {self.n_columns}，每列至少需要返回 1 个结果",
                suggestion="增大 K 或减少 n_columns",
            )
        if not 0.0 < scan_ratio <= 1.0:
            raise InvalidParameterError(f"scan_ratio 必须在 (0,1] 内，当前 {scan_ratio}")
        query = np.asarray(query, dtype=np.float32).reshape(-1)
        if query.size != self.dim:
            raise ShapeError(f"查询维度 {query.size} 与索引维度 {self.dim} 不一致")

        per_column = self.per_column_k(k)
        scans = []
        latency = []
        for column in self.columns:
            # 整列扫描时返回最多 K 个候选
            take = max(per_column, k) if scan_budget(scan_ratio, column.n_items) >= column.n_items else per_column
            start = time.perf_counter()
            scans.append(column.search(query, take, scan_ratio))
            latency.append(round(elapsed_ms(start), 3))
        merged = merge_columns(scans, k)
        return SearchResult(
            item_ids=[i for i, _ in merged],
            scores=[s for _, s in merged],
            column_latency_ms=latency,
            scanned=sum(s.scanned for s in scans),
        )

    def exact_search(self, query: np.ndarray, k: int) -> List[int]:
        """对反量化向量做暴力检索（分数降序、id 升序）"""
        query = np.asarray(query, dtype=np.float32).reshape(-1)
        ids = np.concatenate([c.item_ids for c in self.columns])
        scores = np.concatenate([c.dequantized() @ query for c in self.columns])
        order = np.lexsort((ids, -scores))[:k]
        return ids[order].tolist()

    def status(self) -> Dict[str, Any]:
        return {
            "n_columns": self.n_columns,
            "dim": self.dim,
            "n_items": self.n_items,
            "columns": [
                {"column": c.column, "items": c.n_items, "nodes": c.n_nodes, "leaves": c.n_leaves}
                for c in self.columns
            ],
            "config": self.config.to_dict(),
        }

    # =====================
    # 持久化
    # =====================

    def save(self, index_dir: str) -> List[str]:
        Path(index_dir).mkdir(parents=True, exist_ok=True)
        for stale in Path(index_dir).glob("column_*.mgx"):
            stale.unlink()
        paths = []
        for column in self.columns:
            path = column_file(index_dir, column.column)
            column.save(str(path))
            paths.append(str(path))
        logger.info(f"[索引] {self.n_columns} 列索引已写入 {index_dir}")
        return paths

    @classmethod
    def load(cls, index_dir: str) -> "AnnIndex":
        """
        Raises:
            IndexFormatError: 目录不存在、缺列或列号不连续
        """
        if not Path(index_dir).is_dir():
            raise IndexFormatError(f"索引目录不存在: {index_dir}")
        first = column_file(index_dir, 0)
        if not first.exists():
            raise IndexFormatError(f"索引目录中缺少 {first.name}")
        head = Column.load(str(first))
        columns = [head] + [Column.load(str(column_file(index_dir, c))) for c in range(1, head.n_columns)]
        for expected, column in enumerate(columns):
            if column.column != expected or column.dim != head.dim:
                raise IndexFormatError(f"第 {expected} 列索引文件与其他列不一致")
        known = set(IndexConfig.__dataclass_fields__)
        config = IndexConfig(**{k: v for k, v in head.config.items() if k in known})
        return cls(columns, config)


def build_index(matrix: np.ndarray, config: IndexConfig) -> AnnIndex:
    """
    从 [M, d] 商品嵌入（行号即 item_id）构建多列索引

    Raises:
        DataError: 某列分片为空（商品数少于列数）
    """
    config.validate()
    matrix = np.asarray(matrix, dtype=np.float32)
    ids = np.arange(matrix.shape[0], dtype=np.int64)
    columns = []
    for c in range(config.n_columns):
        shard = ids[ids % config.n_columns == c]
        column = build_column(shard, matrix[shard], config, c)
        column.n_columns = config.n_columns
        columns.append(column)
    return AnnIndex(columns, config)


def build_index_from_file(embeddings_path: str, config: IndexConfig, index_dir: str) -> AnnIndex:
    index = build_index(read_embeddings(embeddings_path), config)
    index.save(index_dir)
    return index
