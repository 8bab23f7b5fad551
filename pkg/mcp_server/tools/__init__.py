"""
MCP 工具模块

包含所有MCP工具的实现。
"""
