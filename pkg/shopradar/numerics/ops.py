# coding=utf-8
"""
复合运算：带掩码 softmax、交叉熵、层归一化、dropout、掩码均值
"""

from typing import Optional

import numpy as np

from shopradar.core.errors import ShapeError
from shopradar.numerics.tensor import Tensor, make_result, mul, reduce_sum


def _masked_softmax(x: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    """最后一维 softmax；mask 为 False 的位置概率为 0，整行被屏蔽时输出全 0"""
    if mask is None:
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)
    mask = np.broadcast_to(mask, x.shape)
    filled = np.where(mask, x, -np.inf)
    row_max = filled.max(axis=-1, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.where(mask, np.exp(np.where(mask, x, 0.0) - row_max), 0.0)
    total = e.sum(axis=-1, keepdims=True)
    return np.divide(e, total, out=np.zeros_like(e), where=total > 0)


def softmax(x: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """
    最后一维 softmax

    Args:
        x: 任意形状的 logits
        mask: 可广播到 x 的布尔数组，False 表示屏蔽（等价于 -∞ logit）

    Returns:
        概率张量，每行和为 1（整行屏蔽时为 0）
    """
    p = _masked_softmax(x.data, mask)

    def backward(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return make_result(p.astype(x.dtype, copy=False), (x,), backward, "softmax")


def softmax_cross_entropy(logits: Tensor, targets, mask: Optional[np.ndarray] = None) -> Tensor:
    """
    逐行 softmax 交叉熵 −log p(target)

    Args:
        logits: [R, C]
        targets: 长度 R 的目标列下标
        mask: [R, C] 布尔数组，False 的列不参与归一化（目标列不得被屏蔽）

    Returns:
        [R] 每行损失
    """
    if logits.ndim != 2:
        raise ShapeError(f"交叉熵需要二维 logits，当前 {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64)
    rows = np.arange(logits.shape[0])
    x = logits.data.astype(np.float64)
    if mask is not None:
        mask = np.broadcast_to(mask, x.shape)
        if not np.all(mask[rows, targets]):
            raise ShapeError("交叉熵的目标列被掩码屏蔽")
    z = x if mask is None else np.where(mask, x, -np.inf)
    row_max = z.max(axis=-1, keepdims=True)
    e = np.exp(z - row_max)
    total = e.sum(axis=-1, keepdims=True)
    p = e / total
    lse = (row_max + np.log(total))[:, 0]
    loss = (lse - x[rows, targets]).astype(logits.dtype)

    def backward(g):
        grad = p.copy()
        grad[rows, targets] -= 1.0
        return ((grad * g[:, None]).astype(logits.dtype),)

    return make_result(loss, (logits,), backward, "softmax_ce")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """最后一维层归一化"""
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data + beta.data
    n = x.shape[-1]

    def backward(g):
        dxhat = g * gamma.data
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True) / n)
        lead = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return make_result(out, (x, gamma, beta), backward, "layer_norm")


def dropout(x: Tensor, p: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """反向 dropout；推理时恒等"""
    if not training or p <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return mul(x, Tensor(keep))


def masked_mean(x: Tensor, mask: np.ndarray, axis: int) -> Tensor:
    """
    掩码均值：只对 mask 为 True 的位置求平均，全空时结果为 0

    Args:
        x: [..., T, d]（axis 指向 T）
        mask: 形状为 x.shape[:axis+1] 的布尔数组
    """
    m = np.asarray(mask, dtype=x.dtype)
    counts = m.sum(axis=axis, keepdims=True)
    weights = np.divide(m, counts, out=np.zeros_like(m), where=counts > 0)
    weights = weights.reshape(weights.shape + (1,) * (x.ndim - weights.ndim))
    return reduce_sum(mul(x, Tensor(weights)), axis=axis)


def dot(a: Tensor, b: Tensor) -> Tensor:
    """最后一维内积"""
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError(f"内积维度不匹配: {a.shape} · {b.shape}")
    return reduce_sum(mul(a, b), axis=-1)
