# coding=utf-8
"""
服务模块 - 在线检索路径与 NDJSON 服务
"""

from shopradar.service.pipeline import ServePipeline, ServeResponse
from shopradar.service.server import SearchServer, handle_line, run_server

__all__ = [
    "ServePipeline",
    "ServeResponse",
    "SearchServer",
    "handle_line",
    "run_server",
]
