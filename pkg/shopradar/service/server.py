# coding=utf-8
"""
批量检索服务（换行分隔 JSON，本地 TCP）

每行一个请求 {"user_id": 7, "query": "adidas shoes", "k": 100}，
每行返回 {"item_ids": [...], "scores": [...], "kept": n, "dropped": m}；
出错时返回 {"success": false, "error": {...}}，连接保持。
"""

import asyncio
import json
import logging
from typing import Optional

from shopradar.core.errors import ShopRadarError
from shopradar.service.pipeline import ServePipeline

logger = logging.getLogger(__name__)


def handle_line(pipeline: ServePipeline, line: str) -> str:
    """处理一行请求，返回一行 JSON（不含换行）"""
    try:
        request = json.loads(line)
        payload = pipeline.handle(request)
    except json.JSONDecodeError as e:
        payload = {"success": False, "error": {"code": "BAD_REQUEST", "message": f"JSON 解析失败: {e}"}}
    except ShopRadarError as e:
        payload = {"success": False, "error": e.to_dict()}
    except (TypeError, ValueError) as e:
        payload = {"success": False, "error": {"code": "BAD_REQUEST", "message": str(e)}}
    return json.dumps(payload, ensure_ascii=False)


class SearchServer:
    """
    Args:
        pipeline: 只读检索路径
        host / port: 监听地址
    """

    def __init__(self, pipeline: ServePipeline, host: str = "127.0.0.1", port: int = 7788):
        self.pipeline = pipeline
        self.host = host
        self.port = port
        self._server: Optional[asyncio.AbstractServer] = None

    async def _client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer = writer.get_extra_info("peername")
        logger.debug(f"[服务] 新连接 {peer}")
        try:
            while True:
                raw = await reader.readline()
                if not raw:
                    break
                line = raw.decode("utf-8").strip()
                if not line:
                    continue
                reply = await asyncio.to_thread(handle_line, self.pipeline, line)
                writer.write((reply + "\n").encode("utf-8"))
                await writer.drain()
        except ConnectionError:
            pass
        finally:
            writer.close()

    async def start(self) -> asyncio.AbstractServer:
        self._server = await asyncio.start_server(self._client, self.host, self.port)
        sockets = self._server.sockets or []
        if sockets:
            self.port = sockets[0].getsockname()[1]
        logger.info(f"[服务] 监听 {self.host}:{self.port}")
        return self._server

    async def serve_forever(self) -> None:
        server = self._server or await self.start()
        async with server:
            await server.serve_forever()

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None


def run_server(pipeline: ServePipeline, host: str, port: int) -> None:
    """阻塞运行，Ctrl+C 退出"""
    server = SearchServer(pipeline, host, port)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        logger.info("[服务] 已停止")
