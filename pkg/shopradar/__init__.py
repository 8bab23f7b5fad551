# coding=utf-8
"""
ShopRadar - 个性化商品语义检索（双塔模型 + 多列 ANN + 相关性控制）

使用方式:
  python -m shopradar gen-data     # 模块执行
  shopradar train                  # 安装后执行
"""

__version__ = "1.0.0"

from shopradar.context import AppContext  # noqa: E402

__all__ = ["AppContext", "__version__"]
