# coding=utf-8
"""
张量与反向传播

numpy 承载数据的最小反向模式自动微分：
- Tensor: 数据 + 父节点 + 局部反向函数
- Graph: 从损失节点出发的拓扑序
- forward_backward(loss): 返回以参数名为键的梯度字典

每个运算结束后都会检查数值有限性，NaN/Inf 立即抛出 NumericError。
"""

import contextlib
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from shopradar.core.errors import NumericError, ShapeError

_DEFAULT_DTYPE = [np.float32]


def default_dtype() -> type:
    """当前默认浮点类型"""
    return _DEFAULT_DTYPE[-1]


@contextlib.contextmanager
def precision(dtype: type) -> Iterator[None]:
    """
    临时切换默认浮点精度（梯度有限差分检查使用 float64）

    Examples:
        >>> with precision(np.float64):
        ...     t = Tensor([1.0, 2.0])
        >>> t.dtype
        dtype('float64')
    """
    _DEFAULT_DTYPE.append(dtype)
    try:
        yield
    finally:
        _DEFAULT_DTYPE.pop()


def as_array(value) -> np.ndarray:
    """转换为默认精度的 numpy 数组"""
    return np.asarray(value, dtype=default_dtype())


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """把广播后的梯度求和还原到原始形状"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    稠密张量

    Attributes:
        data: numpy 数组（行优先）
        requires_grad: 是否需要梯度
        name: 参数名（仅叶子参数设置）
        grad: 反向传播后累积的梯度
    """

    __array_priority__ = 100

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        name: Optional[str] = None,
        _parents: Tuple["Tensor", ...] = (),
        _backward: Optional[Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]] = None,
        _op: str = "leaf",
    ):
        if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64):
            self.data = data
        else:
            self.data = as_array(data)
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self.name = name
        self.grad: Optional[np.ndarray] = None
        self._parents = _parents
        self._backward = _backward
        self._op = _op

    # =====================
    # 基本属性
    # =====================

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        """截断梯度（困难负样本的 top-N 选择使用）"""
        return Tensor(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"<Tensor shape={self.shape} op={self._op}{label}>"

    @classmethod
    def param(cls, data, name: str) -> "Tensor":
        """创建可训练参数"""
        return cls(as_array(data).copy(), requires_grad=True, name=name)

    @staticmethod
    def wrap(value) -> "Tensor":
        return value if isinstance(value, Tensor) else Tensor(value)

    # =====================
    # 运算符
    # =====================

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(Tensor.wrap(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(Tensor.wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(Tensor.wrap(other), self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ShapeError("不支持张量除法，请改用标量")
        return mul(self, 1.0 / float(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return reduce_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        return permute(self, axes or None)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)

    def relu(self) -> "Tensor":
        return relu(self)


def make_result(
    data: np.ndarray,
    parents: Tuple[Tensor, ...],
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
    op: str,
) -> Tensor:
    """构造运算结果节点，并检查数值有限性"""
    if not np.all(np.isfinite(data)):
        raise NumericError(
            f"[数值] 运算 {op} 产生 NaN/Inf（输出形状 {data.shape}）",
            suggestion="请检查输入是否有限，或降低学习率/温度",
        )
    if not any(p.requires_grad for p in parents):
        return Tensor(data, _op=op)
    return Tensor(data, _parents=parents, _backward=backward, _op=op)


# =====================
# 逐元素运算
# =====================

def add(a, b) -> Tensor:
    a, b = Tensor.wrap(a), Tensor.wrap(b)
    return make_result(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b) -> Tensor:
    a, b = Tensor.wrap(a), Tensor.wrap(b)
    return make_result(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b) -> Tensor:
    a, b = Tensor.wrap(a), Tensor.wrap(b)
    return make_result(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def neg(a: Tensor) -> Tensor:
    return make_result(-a.data, (a,), lambda g: (-g,), "neg")


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return make_result(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def sigmoid(a: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return make_result(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return make_result(a.data * mask, (a,), lambda g: (g * mask,), "relu")


# =====================
# 矩阵与形状
# =====================

def matmul(a, b) -> Tensor:
    """批量矩阵乘 (..., m, k) @ (..., k, n)，前导维度可广播"""
    a, b = Tensor.wrap(a), Tensor.wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul 需要至少二维输入，当前 {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul 维度不匹配: {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return make_result(a.data @ b.data, (a, b), backward, "matmul")


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape 失败: {a.shape} -> {shape}: {e}")
    return make_result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def permute(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    """轴置换，默认交换最后两维"""
    if axes is None:
        axes = list(range(a.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "permute")


def reduce_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = np.sum(a.data, axis=axis, keepdims=keepdims, dtype=np.float64).astype(a.dtype)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).astype(a.dtype),)

    return make_result(np.asarray(out), (a,), backward, "sum")


def reduce_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    if count == 0:
        raise ShapeError(f"对空维度求均值: shape={a.shape}, axis={axis}")
    return reduce_sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """沿指定轴拼接"""
    tensors = [Tensor.wrap(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat 需要至少一个张量")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat 形状不匹配: {[t.shape for t in tensors]}: {e}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]
    return make_result(out, tuple(tensors), lambda g: tuple(np.split(g, bounds, axis=axis)), "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """沿新轴堆叠"""
    expanded = [reshape(t, t.shape[:axis] + (1,) + t.shape[axis:]) if axis >= 0 else t for t in tensors]
    return concat(expanded, axis=axis)


def take(a: Tensor, index, axis: int = 0) -> Tensor:
    """
    沿轴按下标取值（嵌入查表、取 [CLS] 行、取时间步）

    反向时对重复下标做 scatter-add。
    """
    idx = np.asarray(index)
    scalar = idx.ndim == 0
    out = np.take(a.data, idx, axis=axis)

    def backward(g):
        grad = np.zeros_like(a.data)
        if scalar:
            g = np.expand_dims(g, axis)
            flat_idx = idx.reshape(1)
        else:
            flat_idx = idx.reshape(-1)
            g = g.reshape(a.shape[:axis] + (flat_idx.size,) + a.shape[axis + 1:])
        np.add.at(np.moveaxis(grad, axis, 0), flat_idx, np.moveaxis(g, axis, 0))
        return (grad,)

    return make_result(out, (a,), backward, "take")


def embedding(table: Tensor, ids) -> Tensor:
    """嵌入表查行，ids 可为任意形状的整数数组"""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"嵌入下标越界: 范围 [{ids.min()}, {ids.max()}]，表大小 {table.shape[0]}")
    return take(table, ids, axis=0)


# =====================
# 计算图
# =====================

class Graph:
    """
    从损失节点出发的计算图

    nodes 为拓扑序（父节点在前），backward 按逆序访问每个节点恰好一次。
    """

    def __init__(self, loss: Tensor):
        self.loss = loss
        self.nodes: List[Tensor] = self._toposort(loss)

    @staticmethod
    def _toposort(root: Tensor) -> List[Tensor]:
        order: List[Tensor] = []
        visited = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def parameters(self) -> List[Tensor]:
        return [n for n in self.nodes if n.name is not None and n._backward is None]

    def backward(self) -> Dict[int, np.ndarray]:
        if self.loss.data.size != 1:
            raise ShapeError(f"损失必须是标量，当前形状 {self.loss.shape}")
        grads: Dict[int, np.ndarray] = {id(self.loss): np.ones_like(self.loss.data)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None) if node._backward is not None else grads.get(id(node))
            if g is None or node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if not np.all(np.isfinite(pg)):
                    raise NumericError(f"[数值] 运算 {node._op} 的反向梯度出现 NaN/Inf")
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg
        return grads


def forward_backward(loss: Tensor) -> Dict[str, np.ndarray]:
    """
    对标量损失做反向传播

    Args:
        loss: 标量损失节点

    Returns:
        {参数名: 梯度}，形状与参数一致；参数同时写入 .grad

    Raises:
        ShapeError: 损失不是标量
        NumericError: 反向过程中出现 NaN/Inf
    """
    graph = Graph(loss)
    grads = graph.backward()
    result: Dict[str, np.ndarray] = {}
    for param in graph.parameters():
        g = grads.get(id(param))
        if g is None:
            g = np.zeros_like(param.data)
        param.grad = g.astype(param.dtype, copy=False)
        result[param.name] = param.grad
    return result
