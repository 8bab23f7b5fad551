"""
ShopRadar MCP Server - FastMCP 2.0 实现

把个性化商品检索、评估报告与产物状态以 MCP 工具形式提供给 AI 客户端。
支持 stdio 和 HTTP 两种传输模式。
"""

import asyncio
import json
import os
from pathlib import Path
from typing import Optional, Union

from fastmcp import FastMCP

from shopradar.context import AppContext
from shopradar.core.loader import load_config

from .tools.config_mgmt import ConfigManagementTools
from .tools.search_tools import SearchTools
from .tools.system import SystemManagementTools


# 创建 FastMCP 2.0 应用
mcp = FastMCP('shopradar')

# 全局工具实例（在第一次请求时初始化）
_tools_instances = {}


def _get_tools(project_root: Optional[str] = None, config_path: Optional[str] = None):
    """获取或创建工具实例（单例模式，共享同一个 AppContext）"""
    if not _tools_instances:
        if config_path is None and project_root:
            config_path = str(Path(project_root) / "config" / "config.yaml")
        context = AppContext(load_config(config_path))
        _tools_instances['context'] = context
        _tools_instances['search'] = SearchTools(context)
        _tools_instances['config'] = ConfigManagementTools(context)
        _tools_instances['system'] = SystemManagementTools(context)
    return _tools_instances


def _dumps(result: dict) -> str:
    return json.dumps(result, ensure_ascii=False, indent=2)


# ==================== MCP Resources ====================

@mcp.resource("config://index")
async def get_index_config_resource() -> str:
    """
    获取 ANN 索引配置

    返回列数、分支数、树深与默认扫描比例。
    """
    tools = _get_tools()
    result = await asyncio.to_thread(tools['config'].get_current_config, section="index")
    return _dumps({
        "index": result.get("config", {}),
        "description": "ShopRadar 多列 ANN 索引配置"
    })


@mcp.resource("config://relevance")
async def get_relevance_config_resource() -> str:
    """
    获取相关性控制配置（必选关键词类别与优先级）
    """
    tools = _get_tools()
    result = await asyncio.to_thread(tools['config'].get_current_config, section="relevance")
    return _dumps({
        "relevance": result.get("config", {}),
        "description": "查询改写中作为必选词的属性类别"
    })


# ==================== 检索工具 ====================

@mcp.tool
async def search_products(
    query: str,
    user_id: Optional[Union[int, str]] = None,
    k: Optional[Union[int, str]] = None,
    scan_ratio: Optional[Union[float, str]] = None,
    include_titles: bool = True
) -> str:
    """
    个性化商品语义检索

    用户塔编码 query 与用户行为，在多列 ANN 索引中召回 Top-K，
    再按 query 中的品牌/类目等关键词过滤不相关商品。

    Args:
        query: 商品查询文本，如 "adidas running shoes"
        user_id: 用户 ID；不传或未知用户时走冷启动路径
        k: 召回数量，默认使用 serve.default_k 配置
        scan_ratio: 每列扫描的商品比例 (0, 1]，默认使用 serve.scan_ratio
        include_titles: 是否附带商品标题，默认 True

    Returns:
        JSON格式的检索结果，包含 item_ids、scores、kept、dropped 与必选关键词

    Examples:
        - search_products(query="adidas shoes", user_id=7)
        - search_products(query="red dress", k=50, scan_ratio=0.1)
    """
    tools = _get_tools()
    result = await asyncio.to_thread(
        tools['search'].search_products,
        query=query,
        user_id=user_id,
        k=k,
        scan_ratio=scan_ratio,
        include_titles=include_titles
    )
    return _dumps(result)


# ==================== 评估与系统管理工具 ====================

@mcp.tool
async def get_eval_report(
    name: str = "eval",
    include_records: bool = False
) -> str:
    """
    读取离线评估报告

    Args:
        name: 报告名，对应 shopradar eval --name 的取值，默认 "eval"
        include_records: 是否附带逐 query 记录，默认 False（节省token）

    Returns:
        JSON格式的报告：Recall@K、P_good、P_f_good、漏斗计数与运行配置
    """
    tools = _get_tools()
    result = await asyncio.to_thread(
        tools['system'].get_eval_report, name=name, include_records=include_records
    )
    return _dumps(result)


@mcp.tool
async def get_index_status() -> str:
    """
    获取各阶段产物状态

    返回语料、检查点、嵌入与索引是否就绪，以及索引的列数和每列节点数。

    Returns:
        JSON格式的状态信息
    """
    tools = _get_tools()
    result = await asyncio.to_thread(tools['system'].get_index_status)
    return _dumps(result)


@mcp.tool
async def get_current_config(
    section: str = "all"
) -> str:
    """
    获取当前系统配置

    Args:
        section: 配置节，可选值：
            - "all": 所有配置（默认）
            - "model": 模型结构
            - "training": 训练与损失
            - "index": ANN 索引
            - "relevance": 相关性控制
            - "eval": 评估
            - 以及 app / paths / corpus / serve

    Returns:
        JSON格式的配置信息
    """
    tools = _get_tools()
    result = await asyncio.to_thread(tools['config'].get_current_config, section=section)
    return _dumps(result)


# ==================== 启动入口 ====================

def run_server(
    project_root: Optional[str] = None,
    transport: str = 'stdio',
    host: str = '0.0.0.0',
    port: int = 3333,
    config_path: Optional[str] = None
):
    """
    启动 MCP 服务器

    Args:
        project_root: 项目根目录路径
        transport: 传输模式，'stdio' 或 'http'
        host: HTTP模式的监听地址，默认 0.0.0.0
        port: HTTP模式的监听端口，默认 3333
        config_path: 配置文件路径，默认 <project_root>/config/config.yaml
    """
    if project_root:
        os.chdir(project_root)

    # 初始化工具实例
    _get_tools(project_root, config_path)

    # 打印启动信息
    print()
    print("=" * 60)
    print("  ShopRadar MCP Server - FastMCP 2.0")
    print("=" * 60)
    print(f"  传输模式: {transport.upper()}")

    if transport == 'stdio':
        print("  协议: MCP over stdio (标准输入输出)")
    elif transport == 'http':
        print("  协议: MCP over HTTP")
        print(f"  服务器监听: {host}:{port}")

    print(f"  项目目录: {project_root or '当前目录'}")
    print()
    print("  已注册的工具:")
    print("    1. search_products     - 个性化商品检索（ANN + 相关性过滤）")
    print("    2. get_eval_report     - 读取离线评估报告")
    print("    3. get_index_status    - 获取产物与索引状态")
    print("    4. get_current_config  - 获取当前系统配置")
    print("=" * 60)
    print()

    # 根据传输模式运行服务器
    if transport == 'stdio':
        mcp.run(transport='stdio')
    elif transport == 'http':
        mcp.run(
            transport='http',
            host=host,
            port=port,
            path='/mcp'  # HTTP 端点路径
        )
    else:
        raise ValueError(f"不支持的传输模式: {transport}")


def main():
    import argparse

    parser = argparse.ArgumentParser(
        description='ShopRadar MCP Server - 个性化商品检索 MCP 工具服务器'
    )
    parser.add_argument(
        '--transport',
        choices=['stdio', 'http'],
        default='stdio',
        help='传输模式：stdio (默认) 或 http'
    )
    parser.add_argument('--host', default='0.0.0.0', help='HTTP模式的监听地址，默认 0.0.0.0')
    parser.add_argument('--port', type=int, default=3333, help='HTTP模式的监听端口，默认 3333')
    parser.add_argument('--project-root', help='项目根目录路径')
    parser.add_argument('--config', dest='config_path', help='配置文件路径')

    args = parser.parse_args()

    run_server(
        project_root=args.project_root,
        transport=args.transport,
        host=args.host,
        port=args.port,
        config_path=args.config_path
    )


if __name__ == '__main__':
    main()
