"""
系统管理工具

实现产物状态查询和评估报告读取功能。
"""

from pathlib import Path
from typing import Any, Dict, Optional

from shopradar import __version__
from shopradar.context import AppContext
from shopradar.report.writer import read_json

from ..utils.errors import DataError, error_result
from ..utils.validators import validate_report_name


class SystemManagementTools:
    """系统管理工具类"""

    def __init__(self, context: AppContext):
        self.context = context

    def get_index_status(self) -> Dict[str, Any]:
        """
        获取各阶段产物状态与 ANN 索引结构

        Returns:
            状态字典；索引未构建时 index 为 None

        Example:
            >>> tools = SystemManagementTools(context)
            >>> result = tools.get_index_status()
            >>> print(result['artifacts']['checkpoint'])
        """
        try:
            artifacts = self.context.status()
            index = self.context.index().status() if artifacts["index"] else None
            return {
                "success": True,
                "version": __version__,
                "time": self.context.now_display(),
                "artifacts": artifacts,
                "index": index,
            }

        except Exception as e:
            return error_result(e)

    def get_eval_report(self, name: Optional[str] = "eval", include_records: bool = False) -> Dict[str, Any]:
        """
        读取 eval / sweep 写出的评估报告

        Args:
            name: 报告名（对应 report_dir/<name>.json）
            include_records: 是否附带逐 query 记录

        Returns:
            报告字典
        """
        try:
            name = validate_report_name(name)
            path = Path(self.context.pipeline.report_dir) / f"{name}.json"
            if not path.exists():
                raise DataError(
                    f"评估报告不存在: {path}",
                    code="MISSING_REPORT",
                    suggestion="请先运行 shopradar eval --name " + name,
                )
            report = read_json(str(path))
            if not include_records:
                report.pop("records", None)
            return {
                "success": True,
                "name": name,
                "path": str(path),
                "report": report,
            }

        except Exception as e:
            return error_result(e)
