# coding=utf-8
"""
训练模块 - 采样 softmax / hinge 损失、批构造、训练循环
"""

from shopradar.training.losses import (
    HardNegatives,
    compute_loss,
    gen_hard_negatives,
    hinge_loss,
    negative_mask,
    select_top_negatives,
    softmax_ce_loss,
)
from shopradar.training.batching import BatchSampler, TrainBatch
from shopradar.training.trainer import METRICS_HEADER, Trainer, TrainResult, exact_recall, train

__all__ = [
    # 损失
    "HardNegatives",
    "compute_loss",
    "gen_hard_negatives",
    "hinge_loss",
    "negative_mask",
    "select_top_negatives",
    "softmax_ce_loss",
    # 批构造
    "BatchSampler",
    "TrainBatch",
    # 训练循环
    "METRICS_HEADER",
    "Trainer",
    "TrainResult",
    "exact_recall",
    "train",
]
