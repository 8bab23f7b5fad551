# coding=utf-8
"""
工具模块 - 公共工具函数
"""

from shopradar.utils.time import get_configured_time, format_run_stamp, elapsed_ms

__all__ = ["get_configured_time", "format_run_stamp", "elapsed_ms"]
