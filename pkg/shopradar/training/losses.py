# coding=utf-8
"""
损失函数

- softmax_ce_loss: 温度平滑的采样 softmax 交叉熵，候选集合为 {i+} ∪ 共享随机负样本 ∪ I_mix
- gen_hard_negatives: 取与 q_u 内积最高的 N 个负样本，与 i+ 逐行插值得到 I_mix
- hinge_loss: 成对 hinge 基线

误抽到共享负样本集合中的正样本按样本屏蔽（等价于 −∞ logit）。
采样 softmax 的期望计数校正项省略：均匀采样下它只是常数平移。
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from shopradar.core.config import LossConfig
from shopradar.core.errors import InvalidParameterError, ShapeError
from shopradar.numerics import Tensor, concat, softmax_cross_entropy, take
from shopradar.numerics.tensor import matmul, mul, permute, reduce_sum, reshape


@dataclass
class HardNegatives:
    """I_mix 及其构造信息"""

    mix: Tensor                         # [B, N, d]
    selected: np.ndarray                # [B, N] 被选中的负样本行号
    alpha: np.ndarray                   # [B, N, 1]
    valid: np.ndarray                   # [B, N] 对应负样本未被屏蔽


def negative_mask(pos_ids: np.ndarray, neg_ids: np.ndarray) -> np.ndarray:
    """[B, S]，False 表示该负样本恰好是本样本的正样本"""
    return np.asarray(neg_ids)[None, :] != np.asarray(pos_ids)[:, None]


def select_top_negatives(q_u: np.ndarray, negs: np.ndarray, n: int,
                         mask: Optional[np.ndarray] = None) -> np.ndarray:
    """
    选出每行内积最高的 n 个负样本（分数相同按行号升序）

    Args:
        q_u: [B, d]
        negs: [S, d]
        n: 选取个数
        mask: [B, S]，被屏蔽的负样本排在最后

    Returns:
        [B, n] 负样本行号
    """
    scores = q_u.astype(np.float64) @ negs.astype(np.float64).T
    if mask is not None:
        scores = np.where(mask, scores, -np.inf)
    order = np.argsort(-scores, axis=1, kind="stable")
    return order[:, :n]


def gen_hard_negatives(
    q_u: Tensor,
    i_plus: Tensor,
    negs: Tensor,
    config: LossConfig,
    rng: np.random.Generator,
    mask: Optional[np.ndarray] = None,
    alpha: Optional[np.ndarray] = None,
) -> HardNegatives:
    """
    生成相关性困难负样本 I_mix = α·i+ + (1−α)·I_hard

    top-N 选择视为本步常量（不回传梯度），梯度经 i+ 与 I_hard 的嵌入回传。

    Args:
        q_u: [B, d] 用户塔输出
        i_plus: [B, d] 正样本嵌入
        negs: [S, d] 共享负样本嵌入
        config: 取 hard_neg_count 与 mix_bounds
        rng: α 的随机源
        mask: [B, S] 负样本屏蔽
        alpha: 指定 α（[B, N, 1] 或可广播的标量），测试端点时使用

    Raises:
        InvalidParameterError: N > S
    """
    n = config.hard_neg_count
    s = negs.shape[0]
    b, d = q_u.shape
    if n > s:
        raise InvalidParameterError(f"困难负样本数 N={n} 超过共享负样本数 S={s}")
    if i_plus.shape != q_u.shape or negs.shape[1] != d:
        raise ShapeError(f"困难负样本输入形状不一致: q_u {q_u.shape}, i+ {i_plus.shape}, negs {negs.shape}")

    selected = select_top_negatives(q_u.data, negs.data, n, mask)
    valid = np.ones((b, n), dtype=bool) if mask is None else np.take_along_axis(mask, selected, axis=1)
    hard = take(negs, selected, axis=0)
    if alpha is None:
        lo, hi = config.mix_bounds
        alpha = rng.uniform(lo, hi, size=(b, n, 1))
    alpha = np.broadcast_to(np.asarray(alpha, dtype=q_u.dtype), (b, n, 1))
    mix = mul(Tensor(alpha), reshape(i_plus, (b, 1, d))) + mul(Tensor(1.0 - alpha), hard)
    return HardNegatives(mix=mix, selected=selected, alpha=alpha, valid=valid)


def _check_temperature(config: LossConfig) -> None:
    if config.temperature <= 0:
        raise InvalidParameterError(f"温度 τ 必须 > 0，当前 {config.temperature}")


def candidate_logits(h_qu: Tensor, h_pos: Tensor, h_neg: Tensor) -> Tuple[Tensor, Tensor]:
    """正样本 logit [B, 1] 与共享负样本 logit [B, S]"""
    pos = reshape(reduce_sum(mul(h_qu, h_pos), axis=-1), (h_qu.shape[0], 1))
    neg = matmul(h_qu, permute(h_neg))
    return pos, neg


def softmax_ce_loss(
    h_qu: Tensor,
    h_pos: Tensor,
    h_neg: Tensor,
    pos_ids: np.ndarray,
    neg_ids: np.ndarray,
    config: LossConfig,
    rng: np.random.Generator,
    alpha: Optional[np.ndarray] = None,
) -> Tuple[Tensor, dict]:
    """
    采样 softmax 交叉熵（带温度与 I_mix）

    每个样本的候选为 {i+} ∪ i− ∪ I_mix，logit 统一除以 τ，损失为 −log p(i+) 的批均值。

    Returns:
        (标量损失, 诊断信息)

    Raises:
        InvalidParameterError: τ ≤ 0 或 N > S
    """
    _check_temperature(config)
    b = h_qu.shape[0]
    mask = negative_mask(pos_ids, neg_ids)
    pos, neg = candidate_logits(h_qu, h_pos, h_neg)
    parts = [pos, neg]
    masks = [np.ones((b, 1), dtype=bool), mask]
    hard: Optional[HardNegatives] = None
    if config.hard_neg_count > 0:
        hard = gen_hard_negatives(h_qu, h_pos, h_neg, config, rng, mask, alpha)
        mix_logits = reduce_sum(mul(reshape(h_qu, (b, 1, h_qu.shape[1])), hard.mix), axis=-1)
        parts.append(mix_logits)
        masks.append(hard.valid)
    logits = concat(parts, axis=1) * (1.0 / config.temperature)
    full_mask = np.concatenate(masks, axis=1)
    per_example = softmax_cross_entropy(logits, np.zeros(b, dtype=np.int64), full_mask)
    loss = per_example.mean()

    neg_scores = np.where(mask, neg.data, -np.inf)
    in_batch_acc = float(np.mean(pos.data[:, 0] > neg_scores.max(axis=1)))
    info = {
        "in_batch_accuracy": in_batch_acc,
        "masked_positives": int((~mask).sum()),
        "hard_negatives": hard,
    }
    return loss, info


def hinge_loss(
    h_qu: Tensor,
    h_pos: Tensor,
    h_neg: Tensor,
    pos_ids: np.ndarray,
    neg_ids: np.ndarray,
    margin: float,
) -> Tuple[Tensor, dict]:
    """
    成对 hinge 损失：对所有 (正, 负) 对取 max(0, margin − s(q,i+) + s(q,i−)) 的均值

    Raises:
        InvalidParameterError: margin ≤ 0
    """
    if margin <= 0:
        raise InvalidParameterError(f"hinge margin 必须 > 0，当前 {margin}")
    mask = negative_mask(pos_ids, neg_ids)
    pos, neg = candidate_logits(h_qu, h_pos, h_neg)
    violation = (neg - pos + margin).relu()
    weights = mask.astype(h_qu.dtype)
    count = max(1.0, float(weights.sum()))
    loss = reduce_sum(mul(violation, Tensor(weights))) * (1.0 / count)
    neg_scores = np.where(mask, neg.data, -np.inf)
    return loss, {"in_batch_accuracy": float(np.mean(pos.data[:, 0] > neg_scores.max(axis=1)))}


def compute_loss(h_qu: Tensor, h_pos: Tensor, h_neg: Tensor, pos_ids: np.ndarray, neg_ids: np.ndarray,
                 config: LossConfig, rng: np.random.Generator) -> Tuple[Tensor, dict]:
    """按 loss_kind 分派"""
    if config.loss_kind == "hinge":
        return hinge_loss(h_qu, h_pos, h_neg, pos_ids, neg_ids, config.margin)
    return softmax_ce_loss(h_qu, h_pos, h_neg, pos_ids, neg_ids, config, rng)
