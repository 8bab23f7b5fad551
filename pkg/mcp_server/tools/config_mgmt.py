"""
配置管理工具

实现配置查询功能。
"""

from typing import Any, Dict

from shopradar.context import AppContext

from ..utils.errors import error_result
from ..utils.validators import validate_config_section


class ConfigManagementTools:
    """配置管理工具类"""

    def __init__(self, context: AppContext):
        """
        初始化配置管理工具

        Args:
            context: 应用上下文（与其他工具共享）
        """
        self.context = context

    def get_current_config(self, section: str = "all") -> Dict[str, Any]:
        """
        获取当前系统配置

        Args:
            section: 配置节 - all/app/paths/corpus/model/training/index/relevance/eval/serve

        Returns:
            配置字典

        Example:
            >>> tools = ConfigManagementTools(context)
            >>> result = tools.get_current_config(section="index")
            >>> print(result['config']['N_COLUMNS'])
        """
        try:
            section = validate_config_section(section)
            config = self.context.config
            if section == "all":
                data = {key.lower(): value for key, value in config.items()}
            else:
                data = config[section.upper()]

            return {
                "success": True,
                "section": section,
                "config": data,
            }

        except Exception as e:
            return error_result(e)
