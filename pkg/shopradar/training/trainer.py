# coding=utf-8
"""
训练循环

AdaGrad + 全局范数裁剪，每步写一行指标 CSV（step, loss, recall_at_k, wall_ms），
每 eval_every 步在验证 query 上做一次精确 Recall@K。
出现 NaN/Inf 时先保存最近一次有效参数，再抛出 NumericError。
"""

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from shopradar.core.config import TrainConfig
from shopradar.core.errors import ConfigurationError, NumericError
from shopradar.corpus.models import Corpus
from shopradar.evaluation.metrics import EvalGroup, build_eval_groups, recall_at_k
from shopradar.model.towers import TwoTowerModel
from shopradar.numerics import AdaGradState, adagrad_step, forward_backward
from shopradar.training.batching import BatchSampler, TrainBatch
from shopradar.training.losses import compute_loss
from shopradar.utils.time import elapsed_ms

logger = logging.getLogger(__name__)

METRICS_HEADER = ["step", "loss", "recall_at_k", "wall_ms"]


@dataclass
class TrainResult:
    """训练结果摘要"""

    steps: int = 0
    final_loss: float = float("nan")
    final_in_batch_accuracy: float = 0.0
    recall_curve: List[Dict[str, float]] = field(default_factory=list)   # [{"step", "recall_at_k"}]
    losses: List[float] = field(default_factory=list)

    def steps_to_recall(self, target: float) -> Optional[int]:
        """首次达到目标召回率的步数，未达到返回 None"""
        for point in self.recall_curve:
            if point["recall_at_k"] >= target:
                return int(point["step"])
        return None

    def to_dict(self) -> Dict:
        return {
            "steps": self.steps,
            "final_loss": self.final_loss,
            "final_in_batch_accuracy": self.final_in_batch_accuracy,
            "recall_curve": self.recall_curve,
        }


def exact_recall(model: TwoTowerModel, corpus: Corpus, groups: List[EvalGroup], k: int,
                 batch_size: int = 256, item_matrix: Optional[np.ndarray] = None) -> float:
    """
    精确（暴力内积）Recall@K，用于训练中的验证曲线

    Args:
        item_matrix: 预先导出的商品嵌入；None 时现场导出
    """
    if not groups:
        return 0.0
    items = model.export_item_matrix() if item_matrix is None else item_matrix
    k = min(k, items.shape[0])
    total = 0.0
    for start in range(0, len(groups), batch_size):
        chunk = groups[start:start + batch_size]
        h_qu = model.encode_users(
            [corpus.tokens_text(g.query_tokens) for g in chunk],
            [corpus.user(g.user_id) for g in chunk],
        ).data.astype(np.float32)
        scores = h_qu @ items.T
        for row, group in zip(scores, chunk):
            top = np.argsort(-row, kind="stable")[:k]
            total += recall_at_k(top, group.targets)
    return total / len(groups)


class Trainer:
    """
    Args:
        model: 双塔模型（原地训练）
        corpus: 训练语料
        config: 训练配置
        metrics_path: 指标 CSV 路径，None 时不写文件
        checkpoint_path: 检查点路径，None 时不保存
    """

    def __init__(self, model: TwoTowerModel, corpus: Corpus, config: TrainConfig,
                 metrics_path: Optional[str] = None, checkpoint_path: Optional[str] = None):
        config.validate()
        self.model = model
        self.corpus = corpus
        self.config = config
        self.metrics_path = metrics_path
        self.checkpoint_path = checkpoint_path
        self.rng = np.random.default_rng(config.seed)
        self.sampler = BatchSampler(corpus, config.batch_size, config.shared_negatives, self.rng)
        n_hard = config.loss.hard_neg_count if config.loss.loss_kind == "softmax" else 0
        if n_hard > self.sampler.shared_negatives:
            raise ConfigurationError(
                f"困难负样本数 N={n_hard} 超过可用的共享负样本数 {self.sampler.shared_negatives}"
                f"（S={config.shared_negatives}，商品数 {corpus.n_items}）",
                suggestion="减小 training.hard_negatives 或扩大语料",
            )
        self.state = AdaGradState(learning_rate=config.learning_rate, clip_norm=config.clip_norm)
        self.eval_groups = build_eval_groups(corpus, config.eval_queries)

    def step(self, batch: TrainBatch) -> Dict[str, float]:
        """单步前向、反向与更新，返回 loss 与批内准确率"""
        h_qu = self.model.encode_users(batch.queries, batch.users, self.rng, training=True)
        h_pos = self.model.encode_items(batch.pos_ids)
        h_neg = self.model.encode_items(batch.neg_ids)
        loss, info = compute_loss(h_qu, h_pos, h_neg, batch.pos_ids, batch.neg_ids, self.config.loss, self.rng)
        value = float(loss.data)
        if not np.isfinite(value):
            raise NumericError(f"[训练] loss 为 {value}")
        grads = forward_backward(loss)
        adagrad_step(self.state, self.model.params, grads)
        return {"loss": value, "in_batch_accuracy": info["in_batch_accuracy"]}

    def validate(self) -> float:
        return exact_recall(self.model, self.corpus, self.eval_groups, self.config.eval_k)

    def _save(self) -> None:
        if self.checkpoint_path:
            self.model.save(self.checkpoint_path)
            logger.info(f"[训练] 检查点已保存: {self.checkpoint_path}")

    def train(self, on_step: Optional[Callable[[int, Dict[str, float]], None]] = None) -> TrainResult:
        """
        运行 epochs 轮（max_steps > 0 时提前截止）

        Raises:
            NumericError: 训练发散；此时检查点保存的是发散前的参数
        """
        result = TrainResult()
        writer = None
        handle = None
        if self.metrics_path:
            Path(self.metrics_path).parent.mkdir(parents=True, exist_ok=True)
            handle = open(self.metrics_path, "w", encoding="utf-8", newline="")
            writer = csv.writer(handle)
            writer.writerow(METRICS_HEADER)

        start = time.perf_counter()
        step = 0
        try:
            for epoch in range(self.config.epochs):
                for batch in self.sampler.epoch():
                    if self.config.max_steps and step >= self.config.max_steps:
                        break
                    try:
                        stats = self.step(batch)
                    except NumericError:
                        logger.error(f"[训练] 第 {step + 1} 步出现数值异常，保存最近一次有效参数后中止")
                        self._save()
                        raise
                    step += 1
                    result.losses.append(stats["loss"])
                    result.final_loss = stats["loss"]
                    result.final_in_batch_accuracy = stats["in_batch_accuracy"]

                    recall = ""
                    if self.config.eval_every > 0 and step % self.config.eval_every == 0:
                        value = self.validate()
                        result.recall_curve.append({"step": step, "recall_at_k": value})
                        recall = f"{value:.6f}"
                        logger.info(
                            f"[训练] step={step} loss={stats['loss']:.4f} "
                            f"acc={stats['in_batch_accuracy']:.3f} recall@{self.config.eval_k}={value:.4f}"
                        )
                    if writer:
                        writer.writerow([step, f"{stats['loss']:.6f}", recall, f"{elapsed_ms(start):.1f}"])
                    if on_step:
                        on_step(step, stats)
                logger.info(f"[训练] 第 {epoch + 1}/{self.config.epochs} 轮结束，累计 {step} 步")
        finally:
            if handle:
                handle.close()

        result.steps = step
        self._save()
        return result


def train(model: TwoTowerModel, corpus: Corpus, config: TrainConfig,
          metrics_path: Optional[str] = None, checkpoint_path: Optional[str] = None) -> TrainResult:
    """便捷入口"""
    return Trainer(model, corpus, config, metrics_path, checkpoint_path).train()
