# coding=utf-8
"""
数值模块 - 张量、自动微分、网络层与优化器
"""

from shopradar.numerics.tensor import (
    Tensor,
    Graph,
    forward_backward,
    precision,
    default_dtype,
    concat,
    stack,
    take,
    embedding,
    matmul,
)
from shopradar.numerics.ops import (
    softmax,
    softmax_cross_entropy,
    layer_norm,
    dropout,
    masked_mean,
    dot,
)
from shopradar.numerics.layers import (
    ParameterSet,
    Linear,
    LayerNorm,
    MultiHeadSelfAttention,
    TransformerEncoderLayer,
    LSTM,
    attention,
    multi_head_self_attention,
    lstm_forward,
    orthogonal,
    uniform_embedding,
)
from shopradar.numerics.optim import AdaGradState, adagrad_step, clip_by_global_norm, global_norm
from shopradar.numerics.checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    # 张量
    "Tensor",
    "Graph",
    "forward_backward",
    "precision",
    "default_dtype",
    "concat",
    "stack",
    "take",
    "embedding",
    "matmul",
    # 复合运算
    "softmax",
    "softmax_cross_entropy",
    "layer_norm",
    "dropout",
    "masked_mean",
    "dot",
    # 网络层
    "ParameterSet",
    "Linear",
    "LayerNorm",
    "MultiHeadSelfAttention",
    "TransformerEncoderLayer",
    "LSTM",
    "attention",
    "multi_head_self_attention",
    "lstm_forward",
    "orthogonal",
    "uniform_embedding",
    # 优化器与检查点
    "AdaGradState",
    "adagrad_step",
    "clip_by_global_norm",
    "global_norm",
    "save_checkpoint",
    "load_checkpoint",
]
