# coding=utf-8
"""
参数检查点文件读写

格式（小端）：
    b"MGD1"
    u32 参数个数
    每个参数：u32 名称长度, UTF-8 名称, u32 维数, 各维 u32, f32 数据
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict

import numpy as np

from shopradar.core.errors import CheckpointFormatError

logger = logging.getLogger(__name__)

MAGIC = b"MGD1"


def save_checkpoint(path: str, arrays: Dict[str, np.ndarray]) -> None:
    """按插入顺序写出参数，相同参数产生相同字节"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(arrays)))
        for name, value in arrays.items():
            encoded = name.encode("utf-8")
            value = np.ascontiguousarray(value, dtype="<f4")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", value.ndim))
            if value.ndim:
                f.write(struct.pack(f"<{value.ndim}I", *value.shape))
            f.write(value.tobytes())
    logger.info(f"[检查点] 已保存 {len(arrays)} 个参数到 {path}")


def load_checkpoint(path: str) -> "OrderedDict[str, np.ndarray]":
    """
    读取检查点

    Raises:
        CheckpointFormatError: 文件不存在、魔数错误或内容截断
    """
    if not Path(path).exists():
        raise CheckpointFormatError(f"检查点文件不存在: {path}")
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointFormatError(f"检查点魔数错误: {raw[:4]!r}，期望 {MAGIC!r}")

    offset = 4

    def read(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(raw):
            raise CheckpointFormatError(f"检查点 {path} 内容截断（偏移 {offset}）")
        values = struct.unpack_from(fmt, raw, offset)
        offset += size
        return values

    (count,) = read("<I")
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (name_len,) = read("<I")
        if offset + name_len > len(raw):
            raise CheckpointFormatError(f"检查点 {path} 参数名截断")
        name = raw[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = read("<I")
        shape = read(f"<{rank}I") if rank else ()
        n = int(np.prod(shape)) if shape else 1
        end = offset + 4 * n
        if end > len(raw):
            raise CheckpointFormatError(f"检查点 {path} 参数 {name} 数据截断")
        arrays[name] = np.frombuffer(raw, dtype="<f4", count=n, offset=offset).reshape(shape).astype(np.float32)
        offset = end
    if offset != len(raw):
        raise CheckpointFormatError(f"检查点 {path} 末尾有 {len(raw) - offset} 字节多余数据")
    return arrays
