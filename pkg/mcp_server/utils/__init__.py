"""
工具类模块

提供参数验证、错误处理等辅助功能。
"""
