"""
参数验证工具

提供统一的参数验证功能。
支持 MCP 客户端将参数序列化为字符串的情况。
"""

from typing import List, Optional, Union

from .errors import InvalidParameterError


# ==================== 辅助函数：处理字符串序列化 ====================

def _parse_string_to_int(value: str, param_name: str = "参数") -> int:
    """
    将字符串解析为整数

    Raises:
        InvalidParameterError: 解析失败
    """
    value = value.strip()

    try:
        return int(value)
    except ValueError:
        pass

    # "100.0" 之类的浮点写法
    try:
        return int(float(value))
    except ValueError:
        raise InvalidParameterError(
            f"{param_name} 必须是整数，无法解析: {value}",
            suggestion="请提供有效的整数值，如: 10, 50, 100"
        )


def _parse_string_to_float(value: str, param_name: str = "参数") -> float:
    """
    将字符串解析为浮点数

    Raises:
        InvalidParameterError: 解析失败
    """
    value = value.strip()

    try:
        return float(value)
    except ValueError:
        raise InvalidParameterError(
            f"{param_name} 必须是数字，无法解析: {value}",
            suggestion="请提供有效的数字值，如: 0.05, 0.5"
        )


# ==================== 检索参数 ====================

def validate_query(query: Optional[str]) -> str:
    """
    验证查询文本

    Raises:
        InvalidParameterError: 查询为空
    """
    if query is None or not str(query).strip():
        raise InvalidParameterError(
            "query 不能为空",
            suggestion="请提供商品查询，如: adidas running shoes"
        )
    return str(query).strip()


def validate_user_id(user_id: Optional[Union[int, str]]) -> Optional[int]:
    """
    验证用户 ID，None 表示匿名（冷启动）用户

    Raises:
        InvalidParameterError: 无法解析或为负数
    """
    if user_id is None or (isinstance(user_id, str) and not user_id.strip()):
        return None
    if isinstance(user_id, str):
        user_id = _parse_string_to_int(user_id, "user_id")
    if not isinstance(user_id, int) or isinstance(user_id, bool):
        raise InvalidParameterError("user_id 参数必须是整数类型")
    if user_id < 0:
        raise InvalidParameterError(f"user_id 不能为负数: {user_id}")
    return user_id


def validate_k(k: Optional[Union[int, str]], max_k: int = 10000) -> Optional[int]:
    """
    验证返回数量，None 表示使用配置中的默认值

    Raises:
        InvalidParameterError: 参数无效
    """
    if k is None:
        return None

    if isinstance(k, str):
        k = _parse_string_to_int(k, "k")

    if not isinstance(k, int) or isinstance(k, bool):
        raise InvalidParameterError("k 参数必须是整数类型")

    if k <= 0:
        raise InvalidParameterError("k 必须大于0")

    if k > max_k:
        raise InvalidParameterError(
            f"k 不能超过 {max_k}",
            suggestion="请降低 k 值"
        )

    return k


def validate_scan_ratio(scan_ratio: Optional[Union[float, int, str]]) -> Optional[float]:
    """
    验证扫描比例，取值 (0, 1]

    Raises:
        InvalidParameterError: 超出范围
    """
    if scan_ratio is None:
        return None
    if isinstance(scan_ratio, str):
        scan_ratio = _parse_string_to_float(scan_ratio, "scan_ratio")
    scan_ratio = float(scan_ratio)
    if not 0.0 < scan_ratio <= 1.0:
        raise InvalidParameterError(
            f"scan_ratio 必须在 (0, 1] 之间，当前 {scan_ratio}",
            suggestion="常用取值: 0.05"
        )
    return scan_ratio


# ==================== 配置与报告 ====================

CONFIG_SECTIONS: List[str] = [
    "all", "app", "paths", "corpus", "model", "training",
    "index", "relevance", "eval", "serve",
]


def validate_mode(mode: Optional[str], valid_modes: List[str], default: str) -> str:
    """
    验证枚举型参数

    Raises:
        InvalidParameterError: 取值不在 valid_modes 中
    """
    if mode is None:
        return default

    mode = str(mode).strip().lower()
    if mode not in valid_modes:
        raise InvalidParameterError(
            f"无效的模式: {mode}",
            suggestion=f"支持的模式: {', '.join(valid_modes)}"
        )

    return mode


def validate_config_section(section: Optional[str]) -> str:
    """
    验证配置节参数

    Raises:
        InvalidParameterError: 配置节无效
    """
    return validate_mode(section, CONFIG_SECTIONS, "all")


def validate_report_name(name: Optional[str], default: str = "eval") -> str:
    """
    验证报告名：只允许字母、数字、下划线、连字符与加号

    Raises:
        InvalidParameterError: 名称包含路径分隔符等字符
    """
    if name is None or not str(name).strip():
        return default
    name = str(name).strip()
    if not all(ch.isalnum() or ch in "_-+" for ch in name):
        raise InvalidParameterError(
            f"无效的报告名: {name}",
            suggestion="报告名只能包含字母、数字、_、- 和 +"
        )
    return name
