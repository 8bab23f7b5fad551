# coding=utf-8
"""
报告模块

模块结构：
- writer: JSON / CSV 报告写入
- charts: 收敛曲线与参数扫描图
"""

from shopradar.report.writer import (
    RECORD_COLUMNS,
    read_csv,
    read_json,
    write_csv,
    write_eval_report,
    write_json,
)
from shopradar.report.charts import plot_convergence, plot_sweep

__all__ = [
    # 文件写入
    "RECORD_COLUMNS",
    "read_csv",
    "read_json",
    "write_csv",
    "write_eval_report",
    "write_json",
    # 图表
    "plot_convergence",
    "plot_sweep",
]
