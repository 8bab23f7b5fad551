# coding=utf-8
"""
索引模块 - INT8 量化、层次 K-means、多列 ANN 检索
"""

from shopradar.index.quantize import quantize_int8, quantize_rows, dequantize
from shopradar.index.kmeans import kmeans, repair_empty_clusters
from shopradar.index.column import Column, ColumnScan, build_column, INDEX_MAGIC
from shopradar.index.searcher import (
    AnnIndex,
    SearchResult,
    build_index,
    build_index_from_file,
    merge_columns,
)

__all__ = [
    # 量化
    "quantize_int8",
    "quantize_rows",
    "dequantize",
    # 聚类
    "kmeans",
    "repair_empty_clusters",
    # 单列
    "Column",
    "ColumnScan",
    "build_column",
    "INDEX_MAGIC",
    # 多列
    "AnnIndex",
    "SearchResult",
    "build_index",
    "build_index_from_file",
    "merge_columns",
]
