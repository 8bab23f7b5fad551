# coding=utf-8
"""
应用上下文模块

封装配置访问与各阶段产物（语料、模型、索引、倒排索引）的延迟加载，
CLI、NDJSON 服务与 MCP 工具共用同一套加载逻辑。
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from shopradar.core.config import PipelineConfig
from shopradar.core.errors import DataError
from shopradar.corpus.loader import load_corpus
from shopradar.corpus.models import Corpus
from shopradar.index.searcher import AnnIndex
from shopradar.model.towers import TwoTowerModel
from shopradar.relevance.inverted import InvertedIndex, build_inverted_index
from shopradar.relevance.key_terms import KeyTermRule
from shopradar.service.pipeline import ServePipeline
from shopradar.utils.time import format_run_stamp, get_configured_time

logger = logging.getLogger(__name__)


class AppContext:
    """
    应用上下文类

    Args:
        config: load_config() 返回的配置字典
    """

    def __init__(self, config: Dict[str, Any]):
        self.config = config
        self.pipeline = PipelineConfig.from_config(config)
        self._corpus: Optional[Corpus] = None
        self._model: Optional[TwoTowerModel] = None
        self._index: Optional[AnnIndex] = None
        self._inverted: Optional[InvertedIndex] = None

    # =====================
    # 配置访问
    # =====================

    @property
    def seed(self) -> int:
        return self.pipeline.seed

    @property
    def timezone(self) -> str:
        return self.config["APP"].get("TIMEZONE", "Asia/Shanghai")

    @property
    def debug(self) -> bool:
        return bool(self.config["APP"].get("DEBUG", False))

    @property
    def data_dir(self) -> str:
        return self.config["PATHS"]["DATA_DIR"]

    def run_stamp(self) -> str:
        return format_run_stamp(self.timezone)

    def now_display(self) -> str:
        return get_configured_time(self.timezone).strftime("%Y-%m-%d %H:%M:%S")

    @staticmethod
    def require(path: str, what: str, hint: str) -> str:
        """
        Raises:
            DataError: 路径不存在
        """
        if not path or not Path(path).exists():
            raise DataError(f"{what}不存在: {path}", code="MISSING_ARTIFACT", suggestion=hint)
        return path

    # =====================
    # 产物加载
    # =====================

    def corpus(self) -> Corpus:
        if self._corpus is None:
            corpus_dir = self.require(self.pipeline.corpus_dir, "语料目录", "请先运行 shopradar gen-data")
            m = self.pipeline.model
            self._corpus = load_corpus(
                corpus_dir,
                self.pipeline.lexicon_dir or None,
                max_realtime=m.max_realtime,
                max_short=m.max_short,
                max_long=m.max_long,
                max_queries=self.pipeline.generator.history_queries,
            )
        return self._corpus

    def new_model(self) -> TwoTowerModel:
        return TwoTowerModel.from_corpus(self.corpus(), self.pipeline.model, seed=self.seed)

    def model(self) -> TwoTowerModel:
        if self._model is None:
            checkpoint = self.require(self.pipeline.checkpoint, "检查点", "请先运行 shopradar train")
            self._model = self.new_model().load(checkpoint)
        return self._model

    def index(self) -> AnnIndex:
        if self._index is None:
            self.require(self.pipeline.index_dir, "索引目录", "请先运行 shopradar build-index")
            self._index = AnnIndex.load(self.pipeline.index_dir)
        return self._index

    def inverted(self) -> InvertedIndex:
        if self._inverted is None:
            self._inverted = build_inverted_index(self.corpus())
        return self._inverted

    def rule(self) -> KeyTermRule:
        return KeyTermRule.from_config(self.pipeline.relevance, self.corpus().lexicons)

    def serve_pipeline(self, k: Optional[int] = None, scan_ratio: Optional[float] = None) -> ServePipeline:
        corpus = self.corpus()
        return ServePipeline(
            model=self.model(),
            corpus=corpus,
            index=self.index(),
            inverted=self.inverted(),
            rule=self.rule(),
            default_k=k or self.pipeline.serve_k(corpus.n_items),
            scan_ratio=scan_ratio or self.pipeline.serve_scan_ratio,
        )

    def status(self) -> Dict[str, Any]:
        """各产物是否就绪"""
        p = self.pipeline
        return {
            "corpus": Path(p.corpus_dir).exists(),
            "checkpoint": Path(p.checkpoint).exists(),
            "embeddings": Path(p.embeddings).exists(),
            "index": Path(p.index_dir).exists() and any(Path(p.index_dir).glob("column_*.mgx")),
            "paths": {
                "corpus_dir": p.corpus_dir,
                "checkpoint": p.checkpoint,
                "embeddings": p.embeddings,
                "index_dir": p.index_dir,
                "report_dir": p.report_dir,
            },
        }
