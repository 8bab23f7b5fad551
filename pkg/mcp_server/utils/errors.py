"""
MCP 工具错误处理

MCP 工具与 CLI 共用 shopradar.core.errors 中的异常类型，
这里只负责把异常转换为工具返回的 {"success": false, "error": {...}} 结构。
"""

from typing import Any, Dict

from shopradar.core.errors import (
    DataError,
    InvalidParameterError,
    ShopRadarError,
)

# 工具层沿用 MCPError 这个名字
MCPError = ShopRadarError


def error_result(e: Exception) -> Dict[str, Any]:
    """
    把异常转换为工具失败结果

    Args:
        e: 捕获到的异常

    Returns:
        {"success": False, "error": {...}}
    """
    if isinstance(e, ShopRadarError):
        return {"success": False, "error": e.to_dict()}
    return {
        "success": False,
        "error": {
            "code": "INTERNAL_ERROR",
            "message": str(e)
        }
    }


__all__ = ["MCPError", "DataError", "InvalidParameterError", "error_result"]
