# coding=utf-8
"""
网络层：参数集合、初始化、线性层、多头自注意力、LSTM、Transformer 编码层

所有层把参数注册到同一个 ParameterSet，参数名带层前缀，
检查点与优化器都按参数名工作。
"""

import math
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from shopradar.core.errors import ShapeError
from shopradar.numerics.ops import dropout, layer_norm, softmax
from shopradar.numerics.tensor import Tensor, as_array, concat, matmul, permute, reshape, take


# =====================
# 初始化
# =====================

def orthogonal(shape: Tuple[int, int], rng: np.random.Generator, gain: float = 1.0) -> np.ndarray:
    """正交初始化（QR 分解，符号按对角线校正）"""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def uniform_embedding(shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """嵌入表均匀初始化，范围 ±1/sqrt(d)"""
    bound = 1.0 / math.sqrt(shape[1])
    return rng.uniform(-bound, bound, size=shape)


class ParameterSet:
    """
    有序参数集合

    Examples:
        >>> ps = ParameterSet()
        >>> w = ps.add("w", np.zeros((2, 2)))
        >>> list(ps.names())
        ['w']
    """

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ShapeError(f"参数名重复: {name}")
        tensor = Tensor.param(value, name)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> Iterator[str]:
        return iter(self._params.keys())

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._params.items())

    def to_arrays(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((n, t.data.copy()) for n, t in self._params.items())

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        """按名称覆盖参数值，名称或形状不一致时报错"""
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ShapeError(f"参数名不一致: 缺少 {sorted(missing)[:5]}，多余 {sorted(extra)[:5]}")
        for name, tensor in self._params.items():
            value = np.asarray(arrays[name])
            if value.shape != tensor.shape:
                raise ShapeError(f"参数 {name} 形状不一致: {value.shape} != {tensor.shape}")
            tensor.data[...] = value

    def num_values(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))


# =====================
# 层
# =====================

class Linear:
    """y = x W (+ b)，W 形状 [in, out]"""

    def __init__(self, params: ParameterSet, name: str, d_in: int, d_out: int,
                 rng: np.random.Generator, bias: bool = True):
        self.weight = params.add(f"{name}.weight", orthogonal((d_in, d_out), rng))
        self.bias = params.add(f"{name}.bias", np.zeros(d_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm:
    def __init__(self, params: ParameterSet, name: str, dim: int):
        self.gamma = params.add(f"{name}.gamma", np.ones(dim))
        self.beta = params.add(f"{name}.beta", np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta)


def attention(q: Tensor, k: Tensor, v: Tensor, key_mask: Optional[np.ndarray] = None,
              scaled: bool = False) -> Tuple[Tensor, np.ndarray]:
    """
    点积注意力 softmax(Q K^T) V

    Args:
        q: [..., Tq, d]
        k, v: [..., Tk, d]
        key_mask: 可广播到 [..., Tq, Tk] 的布尔数组，False 为屏蔽位置
        scaled: 是否除以 sqrt(d)

    Returns:
        (输出 [..., Tq, d], 注意力权重 numpy 数组)
    """
    scores = matmul(q, permute(k))
    if scaled:
        scores = scores * (1.0 / math.sqrt(q.shape[-1]))
    weights = softmax(scores, key_mask)
    return matmul(weights, v), weights.data


class MultiHeadSelfAttention:
    """
    多头自注意力：Q/K/V 投影 → 按头拆分 → 点积注意力 → 合并 → 输出投影

    输入 [B, T, d]，key_mask [B, T]（True 为有效位置）。
    """

    def __init__(self, params: ParameterSet, name: str, dim: int, heads: int,
                 rng: np.random.Generator, scaled: bool = True):
        if heads < 1 or dim % heads != 0:
            raise ShapeError(f"维度 {dim} 不能被头数 {heads} 整除")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.scaled = scaled
        self.q_proj = Linear(params, f"{name}.q", dim, dim, rng, bias=False)
        self.k_proj = Linear(params, f"{name}.k", dim, dim, rng, bias=False)
        self.v_proj = Linear(params, f"{name}.v", dim, dim, rng, bias=False)
        self.o_proj = Linear(params, f"{name}.o", dim, dim, rng, bias=False)
        self.last_weights: Optional[np.ndarray] = None

    def _split(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return permute(reshape(x, (b, t, self.heads, self.head_dim)), (0, 2, 1, 3))

    def __call__(self, x: Tensor, key_mask: Optional[np.ndarray] = None) -> Tensor:
        if x.ndim != 3 or x.shape[-1] != self.dim:
            raise ShapeError(f"自注意力输入应为 [B, T, {self.dim}]，当前 {x.shape}")
        b, t, _ = x.shape
        q = self._split(self.q_proj(x))
        k = self._split(self.k_proj(x))
        v = self._split(self.v_proj(x))
        mask = None if key_mask is None else np.asarray(key_mask, dtype=bool)[:, None, None, :]
        out, self.last_weights = attention(q, k, v, mask, scaled=self.scaled)
        merged = reshape(permute(out, (0, 2, 1, 3)), (b, t, self.dim))
        return self.o_proj(merged)


class TransformerEncoderLayer:
    """
    Pre-LN 编码层：x + MHA(LN(x))，再 y + FFN(LN(y))

    权重全零时该层为恒等映射。
    """

    def __init__(self, params: ParameterSet, name: str, dim: int, heads: int, ffn_mult: int,
                 rng: np.random.Generator, scaled: bool = True):
        self.ln1 = LayerNorm(params, f"{name}.ln1", dim)
        self.attn = MultiHeadSelfAttention(params, f"{name}.attn", dim, heads, rng, scaled)
        self.ln2 = LayerNorm(params, f"{name}.ln2", dim)
        self.ffn_in = Linear(params, f"{name}.ffn_in", dim, ffn_mult * dim, rng)
        self.ffn_out = Linear(params, f"{name}.ffn_out", ffn_mult * dim, dim, rng)

    def __call__(self, x: Tensor, key_mask: Optional[np.ndarray] = None) -> Tensor:
        y = x + self.attn(self.ln1(x), key_mask)
        return y + self.ffn_out(self.ffn_in(self.ln2(y)).relu())


class LSTM:
    """
    多层 LSTM，层间 dropout + 残差连接，返回顶层全部隐状态

    输入 [B, T, d]，隐状态宽度等于 d。序列右侧补齐，
    补齐位置在下游由掩码忽略。
    """

    GATES = ("i", "f", "g", "o")

    def __init__(self, params: ParameterSet, name: str, dim: int, layers: int,
                 dropout_p: float, rng: np.random.Generator):
        if layers < 1:
            raise ShapeError("LSTM 层数必须 ≥ 1")
        self.dim = dim
        self.layers = layers
        self.dropout_p = dropout_p
        self.cells: List[Dict[str, Tuple[Tensor, Tensor, Tensor]]] = []
        for layer in range(layers):
            cell = {}
            for gate in self.GATES:
                prefix = f"{name}.l{layer}.{gate}"
                cell[gate] = (
                    params.add(f"{prefix}.w", orthogonal((dim, dim), rng)),
                    params.add(f"{prefix}.u", orthogonal((dim, dim), rng)),
                    params.add(f"{prefix}.b", np.zeros(dim)),
                )
            self.cells.append(cell)

    def _run_layer(self, cell, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        h = Tensor(np.zeros((b, self.dim), dtype=x.dtype))
        c = Tensor(np.zeros((b, self.dim), dtype=x.dtype))
        outputs = []
        for step in range(t):
            x_t = take(x, step, axis=1)

            def gate(key):
                w, u, bias = cell[key]
                return matmul(x_t, w) + matmul(h, u) + bias

            i = gate("i").sigmoid()
            f = gate("f").sigmoid()
            g = gate("g").tanh()
            o = gate("o").sigmoid()
            c = f * c + i * g
            h = o * c.tanh()
            outputs.append(reshape(h, (b, 1, self.dim)))
        return concat(outputs, axis=1)

    def __call__(self, x: Tensor, rng: Optional[np.random.Generator] = None,
                 training: bool = False) -> Tensor:
        if x.ndim != 3 or x.shape[1] < 1:
            raise ShapeError(f"LSTM 输入应为非空序列 [B, T, d]，当前 {x.shape}")
        out = self._run_layer(self.cells[0], x)
        for cell in self.cells[1:]:
            inp = dropout(out, self.dropout_p, rng, training)
            out = self._run_layer(cell, inp) + inp
        return out


# =====================
# 单序列函数接口
# =====================

def multi_head_self_attention(seq: Tensor, layer: MultiHeadSelfAttention) -> Tensor:
    """
    单序列多头自注意力

    Args:
        seq: [T, d]
        layer: 已初始化的 MultiHeadSelfAttention

    Returns:
        [T, d]
    """
    t, d = seq.shape
    return reshape(layer(reshape(seq, (1, t, d))), (t, d))


def lstm_forward(seq: Tensor, layer: LSTM, rng: Optional[np.random.Generator] = None,
                 training: bool = False) -> Tensor:
    """
    单序列 LSTM，返回顶层全部 T 个隐状态

    Raises:
        ShapeError: 空序列
    """
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise ShapeError(f"LSTM 需要非空序列，当前形状 {seq.shape}")
    t, d = seq.shape
    return reshape(layer(reshape(seq, (1, t, d)), rng, training), (t, d))


def zeros_like_params(params: ParameterSet) -> None:
    """把所有参数置零（测试与消融使用）"""
    for _, tensor in params.items():
        tensor.data[...] = 0.0


def set_param(params: ParameterSet, name: str, value) -> None:
    params[name].data[...] = as_array(value)
