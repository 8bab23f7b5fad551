# coding=utf-8
"""
AdaGrad 优化器（先按全局范数裁剪梯度）
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from shopradar.core.errors import NumericError, ShapeError
from shopradar.numerics.layers import ParameterSet

logger = logging.getLogger(__name__)


@dataclass
class AdaGradState:
    """
    AdaGrad 状态

    Attributes:
        learning_rate: 学习率
        clip_norm: 全局梯度范数上限
        eps: 分母平滑项
        accumulators: 每个参数的梯度平方累积（非负、单调不减）
    """

    learning_rate: float = 0.1
    clip_norm: float = 3.0
    eps: float = 1e-8
    accumulators: Dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    """所有梯度拼接后的 L2 范数（双精度累加）"""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g, dtype=np.float64)))
    return math.sqrt(total)


def clip_by_global_norm(grads: Dict[str, np.ndarray], clip_norm: float) -> Dict[str, np.ndarray]:
    """
    全局范数裁剪

    Examples:
        >>> g = clip_by_global_norm({"w": np.array([6.0, 0.0])}, 3.0)
        >>> g["w"].tolist()
        [3.0, 0.0]
    """
    norm = global_norm(grads)
    if norm <= clip_norm or norm == 0.0:
        return grads
    scale = clip_norm / norm
    return {name: g * scale for name, g in grads.items()}


def adagrad_step(state: AdaGradState, params: ParameterSet, grads: Dict[str, np.ndarray]) -> None:
    """
    一步 AdaGrad 更新（原地修改参数）

    param ← param − lr · g / sqrt(acc + eps)，acc 先累加 g²；
    更新前梯度按全局范数裁剪到 clip_norm。

    Raises:
        ShapeError: 梯度与参数形状不一致
        NumericError: 梯度含 NaN/Inf
    """
    for name, g in grads.items():
        if name not in params:
            raise ShapeError(f"梯度对应的参数不存在: {name}")
        if g.shape != params[name].shape:
            raise ShapeError(f"参数 {name} 梯度形状 {g.shape} 与参数形状 {params[name].shape} 不一致")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"[优化器] 参数 {name} 的梯度含 NaN/Inf")

    clipped = clip_by_global_norm(grads, state.clip_norm)
    for name, g in clipped.items():
        param = params[name]
        acc = state.accumulators.get(name)
        if acc is None:
            acc = np.zeros(param.shape, dtype=np.float64)
        acc = acc + np.square(g, dtype=np.float64)
        state.accumulators[name] = acc
        delta = state.learning_rate * g / np.sqrt(acc + state.eps)
        param.data[...] = (param.data - delta).astype(param.dtype)
    state.steps += 1
