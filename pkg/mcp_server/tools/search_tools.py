"""
商品检索工具

通过在线检索路径（用户塔编码 → 多列 ANN → 相关性过滤）返回商品列表。
"""

import logging
from typing import Any, Dict, Optional, Union

from shopradar.context import AppContext
from shopradar.service.pipeline import ServePipeline

from ..utils.errors import error_result
from ..utils.validators import validate_k, validate_query, validate_scan_ratio, validate_user_id

logger = logging.getLogger(__name__)


class SearchTools:
    """商品检索工具类"""

    def __init__(self, context: AppContext):
        self.context = context
        self._pipeline: Optional[ServePipeline] = None

    @property
    def pipeline(self) -> ServePipeline:
        # 首次调用时加载检查点与索引
        if self._pipeline is None:
            self._pipeline = self.context.serve_pipeline()
            logger.info(f"[服务] 检索路径就绪，默认 K={self._pipeline.default_k}")
        return self._pipeline

    def search_products(
        self,
        query: str,
        user_id: Optional[Union[int, str]] = None,
        k: Optional[Union[int, str]] = None,
        scan_ratio: Optional[Union[float, str]] = None,
        include_titles: bool = True,
    ) -> Dict[str, Any]:
        """
        个性化商品检索

        Args:
            query: 查询文本
            user_id: 用户 ID；为空或未知用户走冷启动路径
            k: 召回数 K，默认使用 serve.default_k
            scan_ratio: 每列扫描比例，默认使用 serve.scan_ratio
            include_titles: 是否附带商品标题

        Returns:
            检索结果字典

        Example:
            >>> tools = SearchTools(context)
            >>> result = tools.search_products("adidas shoes", user_id=7, k=50)
            >>> result['kept'] <= 50
            True
        """
        try:
            query = validate_query(query)
            user_id = validate_user_id(user_id)
            k = validate_k(k)
            scan_ratio = validate_scan_ratio(scan_ratio)

            response = self.pipeline.search(user_id, query, k=k, scan_ratio=scan_ratio)
            result: Dict[str, Any] = {
                "success": True,
                "query": query,
                "user_id": user_id,
                **response.to_dict(verbose=True),
            }
            if include_titles:
                corpus = self.context.corpus()
                result["titles"] = [corpus.tokens_text(corpus.item(i).title_tokens) for i in response.item_ids]
            return result

        except Exception as e:
            return error_result(e)
