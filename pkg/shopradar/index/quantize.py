# coding=utf-8
"""
INT8 对称线性量化（逐向量一个 scale）

scale = max|v| / 127，code = clip(round(v / scale), −127, 127)；全零向量 scale 记为 0。
查询向量保持 f32，只量化入库向量。
"""

from typing import Tuple

import numpy as np

from shopradar.core.errors import NumericError

INT8_LIMIT = 127


def quantize_int8(v: np.ndarray) -> Tuple[np.ndarray, np.float32]:
    """
    单个向量量化

    Examples:
        >>> codes, scale = quantize_int8(np.array([2.54, -2.54], dtype=np.float32))
        >>> codes.tolist()
        [127, -127]

    Raises:
        NumericError: 含 NaN/Inf
    """
    codes, scales = quantize_rows(np.asarray(v, dtype=np.float32).reshape(1, -1))
    return codes[0], scales[0]


def quantize_rows(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    按行量化 [M, d] → (int8 [M, d], f32 [M])
    """
    matrix = np.asarray(matrix, dtype=np.float32)
    if not np.all(np.isfinite(matrix)):
        raise NumericError("[索引] 量化输入含 NaN/Inf")
    peak = np.abs(matrix).max(axis=1) if matrix.size else np.zeros(matrix.shape[0], dtype=np.float32)
    scales = (peak / np.float32(INT8_LIMIT)).astype(np.float32)
    safe = np.where(scales > 0, scales, np.float32(1.0))
    codes = np.clip(np.rint(matrix / safe[:, None]), -INT8_LIMIT, INT8_LIMIT).astype(np.int8)
    codes[scales == 0] = 0
    return codes, scales


def dequantize(codes: np.ndarray, scales) -> np.ndarray:
    """codes · scale（单向量或按行）"""
    codes = np.asarray(codes, dtype=np.float32)
    scales = np.asarray(scales, dtype=np.float32)
    if codes.ndim == 1:
        return codes * scales
    return codes * scales[:, None]
