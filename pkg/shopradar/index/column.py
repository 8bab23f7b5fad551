# coding=utf-8
"""
单列索引：层次 K-means 聚类树 + INT8 叶子

树按层序编号，同一节点的子节点编号连续；叶子内商品按 id 升序存放，
全部叶子的商品依叶子顺序拼接成一段连续数组。

文件格式（MGX1，整数均为小端 u32）:
    magic "MGX1"
    header_len, header JSON（列号、维度、计数与索引配置回显）
    节点表 n_nodes × (level, first_child, n_children, leaf_id)
    质心 n_nodes × d f32
    叶子目录 n_leaves × (offset, count)
    item_ids n_items u32, scales n_items f32, codes n_items × d i8
"""

import heapq
import json
import logging
import struct
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from shopradar.core.config import IndexConfig, scan_budget
from shopradar.core.errors import DataError, IndexFormatError, ShapeError
from shopradar.index.kmeans import kmeans
from shopradar.index.quantize import dequantize, quantize_rows

logger = logging.getLogger(__name__)

INDEX_MAGIC = b"MGX1"
NO_LEAF = 0xFFFFFFFF


@dataclass
class ColumnScan:
    """单列检索结果"""

    item_ids: np.ndarray                # 按分数降序、id 升序
    scores: np.ndarray
    scanned: int                        # 实际打分的向量数
    visited_leaves: int = 0


@dataclass
class Column:
    """一列索引（构建后只读）"""

    column: int
    dim: int
    levels: np.ndarray                  # [n_nodes]
    first_child: np.ndarray             # [n_nodes]
    n_children: np.ndarray              # [n_nodes]
    leaf_of_node: np.ndarray            # [n_nodes]，内部节点为 NO_LEAF
    centroids: np.ndarray               # [n_nodes, d] f32
    leaf_offsets: np.ndarray            # [n_leaves]
    leaf_counts: np.ndarray             # [n_leaves]
    item_ids: np.ndarray                # [n_items] 按叶子顺序
    scales: np.ndarray                  # [n_items] f32
    codes: np.ndarray                   # [n_items, d] i8
    config: Dict[str, Any] = field(default_factory=dict)
    n_columns: int = 1

    @property
    def n_items(self) -> int:
        return int(self.item_ids.size)

    @property
    def n_nodes(self) -> int:
        return int(self.levels.size)

    @property
    def n_leaves(self) -> int:
        return int(self.leaf_offsets.size)

    def leaf_items(self, leaf: int) -> np.ndarray:
        start = int(self.leaf_offsets[leaf])
        return self.item_ids[start:start + int(self.leaf_counts[leaf])]

    def children(self, node: int) -> range:
        start = int(self.first_child[node])
        return range(start, start + int(self.n_children[node]))

    def dequantized(self) -> np.ndarray:
        return dequantize(self.codes, self.scales)

    # =====================
    # 检索
    # =====================

    def search(self, query: np.ndarray, k: int, scan_ratio: float) -> ColumnScan:
        """
        按质心分数优先展开节点，最多对 ceil(scan_ratio · 列大小) 个量化向量打分

        Args:
            query: [d] f32
            k: 本列返回数
            scan_ratio: (0, 1]
        """
        query = np.asarray(query, dtype=np.float32).reshape(-1)
        if query.size != self.dim:
            raise ShapeError(f"查询维度 {query.size} 与索引维度 {self.dim} 不一致")
        budget = scan_budget(scan_ratio, self.n_items)
        frontier: List[Tuple[float, int]] = [(0.0, 0)]
        spans: List[Tuple[int, int]] = []
        scanned = 0
        leaves = 0
        while frontier and scanned < budget:
            _, node = heapq.heappop(frontier)
            leaf = int(self.leaf_of_node[node])
            if leaf != NO_LEAF:
                start = int(self.leaf_offsets[leaf])
                take = min(int(self.leaf_counts[leaf]), budget - scanned)
                spans.append((start, start + take))
                scanned += take
                leaves += 1
                continue
            kids = np.arange(int(self.first_child[node]), int(self.first_child[node]) + int(self.n_children[node]))
            scores = self.centroids[kids] @ query
            for child, s in zip(kids.tolist(), scores.tolist()):
                heapq.heappush(frontier, (-s, child))

        if not spans:
            return ColumnScan(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float32), 0, 0)
        rows = np.sort(np.concatenate([np.arange(a, b) for a, b in spans]))
        ids = self.item_ids[rows].astype(np.int64)
        scores = dequantize(self.codes[rows], self.scales[rows]) @ query
        order = np.lexsort((ids, -scores))[:k]
        return ColumnScan(ids[order], scores[order].astype(np.float32), scanned, leaves)

    # =====================
    # 序列化
    # =====================

    def header(self) -> Dict[str, Any]:
        return {
            "column": self.column,
            "n_columns": self.n_columns,
            "dim": self.dim,
            "n_items": self.n_items,
            "n_nodes": self.n_nodes,
            "n_leaves": self.n_leaves,
            "config": self.config,
        }

    def to_bytes(self) -> bytes:
        header = json.dumps(self.header(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        nodes = np.stack([self.levels, self.first_child, self.n_children, self.leaf_of_node], axis=1)
        leaf_dir = np.stack([self.leaf_offsets, self.leaf_counts], axis=1) if self.n_leaves else np.zeros((0, 2))
        parts = [
            INDEX_MAGIC,
            struct.pack("<I", len(header)),
            header,
            nodes.astype("<u4").tobytes(),
            self.centroids.astype("<f4").tobytes(),
            leaf_dir.astype("<u4").tobytes(),
            self.item_ids.astype("<u4").tobytes(),
            self.scales.astype("<f4").tobytes(),
            self.codes.astype(np.int8).tobytes(),
        ]
        return b"".join(parts)

    def save(self, path: str) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, raw: bytes, source: str = "") -> "Column":
        """
        Raises:
            IndexFormatError: 魔数、头部或长度不符
        """
        if raw[:4] != INDEX_MAGIC or len(raw) < 8:
            raise IndexFormatError(f"索引文件魔数错误{f'（{source}）' if source else ''}: {raw[:4]!r}")
        (header_len,) = struct.unpack_from("<I", raw, 4)
        pos = 8 + header_len
        try:
            header = json.loads(raw[8:pos].decode("utf-8"))
            dim, n_items = int(header["dim"]), int(header["n_items"])
            n_nodes, n_leaves = int(header["n_nodes"]), int(header["n_leaves"])
        except (ValueError, KeyError, UnicodeDecodeError) as e:
            raise IndexFormatError(f"索引文件头部无法解析: {e}")

        sizes = [n_nodes * 16, n_nodes * dim * 4, n_leaves * 8, n_items * 4, n_items * 4, n_items * dim]
        if len(raw) != pos + sum(sizes):
            raise IndexFormatError(f"索引文件长度 {len(raw)} 与头部声明不符（期望 {pos + sum(sizes)}）")

        def section(size: int, dtype: str, shape: Tuple[int, ...]) -> np.ndarray:
            nonlocal pos
            out = np.frombuffer(raw, dtype=dtype, count=int(np.prod(shape)), offset=pos).reshape(shape)
            pos += size
            return out

        nodes = section(sizes[0], "<u4", (n_nodes, 4)).astype(np.int64)
        centroids = section(sizes[1], "<f4", (n_nodes, dim)).astype(np.float32)
        leaf_dir = section(sizes[2], "<u4", (n_leaves, 2)).astype(np.int64)
        item_ids = section(sizes[3], "<u4", (n_items,)).astype(np.int64)
        scales = section(sizes[4], "<f4", (n_items,)).astype(np.float32)
        codes = section(sizes[5], "<i1", (n_items, dim)).copy()
        return cls(
            column=int(header["column"]),
            dim=dim,
            levels=nodes[:, 0],
            first_child=nodes[:, 1],
            n_children=nodes[:, 2],
            leaf_of_node=nodes[:, 3],
            centroids=centroids,
            leaf_offsets=leaf_dir[:, 0],
            leaf_counts=leaf_dir[:, 1],
            item_ids=item_ids,
            scales=scales,
            codes=codes,
            config=dict(header.get("config", {})),
            n_columns=int(header.get("n_columns", 1)),
        )

    @classmethod
    def load(cls, path: str) -> "Column":
        if not Path(path).exists():
            raise IndexFormatError(f"索引文件不存在: {path}")
        return cls.from_bytes(Path(path).read_bytes(), source=path)


def build_column(item_ids: np.ndarray, vectors: np.ndarray, config: IndexConfig, column: int = 0) -> Column:
    """
    层次 K-means 构建单列

    节点在达到 depth、规模 ≤ leaf_cap、规模 < branching 或聚类只得到一个簇时成为叶子。

    Raises:
        DataError: 分片为空
    """
    item_ids = np.asarray(item_ids, dtype=np.int64)
    vectors = np.asarray(vectors, dtype=np.float32)
    if item_ids.size == 0:
        raise DataError(f"第 {column} 列分片为空，请减少列数", code="EMPTY_SHARD")
    dim = vectors.shape[1]

    levels: List[int] = [0]
    members: List[np.ndarray] = [np.arange(item_ids.size)]
    centroids: List[np.ndarray] = [vectors.mean(axis=0)]
    first_child: List[int] = [0]
    n_children: List[int] = [0]
    queue = deque([0])
    while queue:
        node = queue.popleft()
        rows = members[node]
        if levels[node] >= config.depth or rows.size <= config.leaf_cap or rows.size < config.branching:
            continue
        labels, cents = kmeans(
            vectors[rows],
            config.branching,
            iterations=config.kmeans_iterations,
            sample_cap=min(config.kmeans_sample_cap, rows.size),
            seed=config.seed + node,
        )
        if cents.shape[0] < 2:
            continue
        first_child[node] = len(levels)
        n_children[node] = cents.shape[0]
        for c in range(cents.shape[0]):
            levels.append(levels[node] + 1)
            members.append(rows[labels == c])
            centroids.append(cents[c])
            first_child.append(0)
            n_children.append(0)
            queue.append(len(levels) - 1)

    leaf_of_node = np.full(len(levels), NO_LEAF, dtype=np.int64)
    order: List[np.ndarray] = []
    offsets: List[int] = []
    counts: List[int] = []
    offset = 0
    for node in range(len(levels)):
        if n_children[node]:
            continue
        leaf_rows = members[node][np.argsort(item_ids[members[node]], kind="stable")]
        leaf_of_node[node] = len(offsets)
        offsets.append(offset)
        counts.append(leaf_rows.size)
        order.append(leaf_rows)
        offset += leaf_rows.size
    rows = np.concatenate(order)
    codes, scales = quantize_rows(vectors[rows])

    logger.info(f"[索引] 第 {column} 列: {item_ids.size} 个商品, {len(levels)} 个节点, {len(offsets)} 个叶子")
    return Column(
        column=column,
        dim=dim,
        levels=np.asarray(levels, dtype=np.int64),
        first_child=np.asarray(first_child, dtype=np.int64),
        n_children=np.asarray(n_children, dtype=np.int64),
        leaf_of_node=leaf_of_node,
        centroids=np.asarray(centroids, dtype=np.float32).reshape(len(levels), dim),
        leaf_offsets=np.asarray(offsets, dtype=np.int64),
        leaf_counts=np.asarray(counts, dtype=np.int64),
        item_ids=item_ids[rows],
        scales=scales,
        codes=codes,
        config=config.to_dict(),
    )
