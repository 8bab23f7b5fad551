# coding=utf-8
"""
图表输出（matplotlib，无界面后端）

- 收敛曲线：各损失的验证 Recall@K 随步数变化
- 扫描表：τ / N 对 P_good 与 Recall 的影响
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

FIGURE_SIZE = (6.4, 4.0)


def _save(fig, path: str) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"[报告] 图表已保存: {path}")
    return str(path)


def plot_convergence(curves: Dict[str, List[Tuple[int, float]]], path: str, k: int = 100) -> str:
    """curves: {标签: [(step, recall)]}"""
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    for label, points in curves.items():
        if not points:
            continue
        steps, values = zip(*points)
        ax.plot(steps, values, marker="o", markersize=3, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel(f"Recall@{k}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_sweep(axis: str, values: Sequence[float], p_good: Sequence[float], recall: Sequence[float],
               path: str) -> str:
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    labels = [str(v) for v in values]
    ax.plot(labels, p_good, marker="s", label="P_good")
    ax.plot(labels, recall, marker="o", label="Recall")
    ax.set_xlabel(axis)
    ax.set_ylim(0.0, 1.0)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)
