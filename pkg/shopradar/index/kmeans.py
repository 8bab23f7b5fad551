# coding=utf-8
"""
K-means 聚类（scikit-learn 实现，k-means++ 初始化，单次初始化保证可复现）

在至多 sample_cap 个样本上拟合，再把全部向量分配到最近质心；
分配后出现空簇时，从最大簇中按离质心距离拆出较远的一半补上。
"""

import logging
import warnings
from typing import Tuple

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

logger = logging.getLogger(__name__)


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """最近质心（欧氏距离，距离相同取编号小者）"""
    dist = (
        np.sum(points.astype(np.float64) ** 2, axis=1)[:, None]
        - 2.0 * points.astype(np.float64) @ centroids.astype(np.float64).T
        + np.sum(centroids.astype(np.float64) ** 2, axis=1)[None, :]
    )
    return np.argmin(dist, axis=1)


def repair_empty_clusters(points: np.ndarray, labels: np.ndarray,
                          centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    拆分最大簇填补空簇；最大簇只剩一个点时丢弃剩余空簇

    Returns:
        (labels, centroids)，簇编号重新压缩为 0..k'−1
    """
    labels = labels.copy()
    centroids = centroids.astype(np.float32).copy()
    k = centroids.shape[0]
    for empty in range(k):
        if np.any(labels == empty):
            continue
        counts = np.bincount(labels, minlength=k)
        largest = int(np.argmax(counts))
        if counts[largest] < 2:
            break
        members = np.flatnonzero(labels == largest)
        dist = np.sum((points[members] - centroids[largest]) ** 2, axis=1)
        order = members[np.argsort(-dist, kind="stable")]
        moved = order[: len(order) // 2]
        labels[moved] = empty
        centroids[empty] = points[moved].mean(axis=0)
        centroids[largest] = points[labels == largest].mean(axis=0)
        logger.debug(f"[索引] 空簇 {empty} 由簇 {largest} 拆分填补（移动 {moved.size} 个点）")

    used = np.unique(labels)
    remap = np.full(k, -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    return remap[labels], centroids[used]


def kmeans(points: np.ndarray, k: int, iterations: int = 20, sample_cap: int = 4_000_000,
           seed: int = 42) -> Tuple[np.ndarray, np.ndarray]:
    """
    Args:
        points: [n, d] f32
        k: 簇数（调用方保证 k ≤ n）
        iterations: Lloyd 迭代上限
        sample_cap: 拟合样本上限
        seed: 随机种子

    Returns:
        (labels [n], centroids [k', d])，k' ≤ k
    """
    points = np.asarray(points, dtype=np.float32)
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    sample = points
    if n > sample_cap:
        sample = points[np.sort(rng.choice(n, size=sample_cap, replace=False))]

    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=1,
        max_iter=iterations,
        random_state=seed,
    )
    with warnings.catch_warnings():
        # 重复点少于 k 时 sklearn 会告警，空簇由下面的修复处理
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(sample)
    centroids = model.cluster_centers_.astype(np.float32)
    labels = _assign(points, centroids)
    return repair_empty_clusters(points, labels, centroids)
