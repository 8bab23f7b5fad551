# coding=utf-8
"""
时间工具模块 - 运行时间戳与耗时统计
"""

import time
from datetime import datetime

import pytz

# 默认时区
DEFAULT_TIMEZONE = "Asia/Shanghai"


def get_configured_time(timezone: str = DEFAULT_TIMEZONE) -> datetime:
    """
    获取配置时区的当前时间

    Args:
        timezone: 时区名称，如 'Asia/Shanghai', 'America/Los_Angeles'

    Returns:
        带时区信息的当前时间
    """
    try:
        tz = pytz.timezone(timezone)
    except pytz.UnknownTimeZoneError:
        print(f"[警告] 未知时区 '{timezone}'，使用默认时区 {DEFAULT_TIMEZONE}")
        tz = pytz.timezone(DEFAULT_TIMEZONE)
    return datetime.now(tz)


def format_run_stamp(timezone: str = DEFAULT_TIMEZONE) -> str:
    """
    运行标识 (格式: YYYY-MM-DD_HH-MM-SS，用于日志与输出目录)

    Windows 系统不支持冒号作为文件名，因此使用连字符
    """
    return get_configured_time(timezone).strftime("%Y-%m-%d_%H-%M-%S")


def elapsed_ms(start: float) -> float:
    """从 time.perf_counter() 起点到现在的毫秒数"""
    return (time.perf_counter() - start) * 1000.0
