"""
ShopRadar MCP Server

提供基于MCP协议的商品检索、评估报告与系统状态查询接口。

"""

from shopradar import __version__

__all__ = ["__version__"]
