# coding=utf-8
"""
语料加载

读取 gen-data 产出的文件并校验引用完整性：
任何日志中引用的 id 都必须能解析到语料实体，否则报告具体 id；
解析失败的行报告文件名与行号。
"""

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set, TypeVar

from shopradar.core.errors import DanglingReferenceError, DataError, MalformedRecordError
from shopradar.corpus.models import (
    ACTIONS,
    ATTRIBUTES,
    Catalog,
    ClickRecord,
    Corpus,
    Item,
    PurchaseRecord,
    Query,
    UserLog,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

REQUIRED_FILES = ("vocab.txt", "items.jsonl")


def read_jsonl(path: Path, parse: Callable[[Dict], T], required: bool = False) -> List[T]:
    """
    逐行解析 JSONL

    Args:
        path: 文件路径
        parse: 行字典 → 记录对象
        required: 文件缺失时是否报错（否则视为空）

    Raises:
        MalformedRecordError: 某一行无法解析（带行号）
    """
    if not path.exists():
        if required:
            raise DataError(f"语料文件不存在: {path}", code="FILE_NOT_FOUND")
        return []
    records: List[T] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(parse(json.loads(line)))
            except (ValueError, KeyError, TypeError) as e:
                raise MalformedRecordError(str(path), line_no, f"{type(e).__name__}: {e}")
    return records


def read_vocab(path: Path) -> List[str]:
    """vocab.txt：每行一个 token，行号即 id"""
    if not path.exists():
        raise DataError(f"词表文件不存在: {path}", code="FILE_NOT_FOUND")
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def read_lexicons(lexicon_dir: Path) -> Dict[str, Set[str]]:
    """
    读取词表目录下的 <class>.txt

    文件首行为 [类别名]，其后每行一个 token；首行缺少类别头时以文件名为类别。
    """
    lexicons: Dict[str, Set[str]] = {}
    if not lexicon_dir.exists():
        return lexicons
    for path in sorted(lexicon_dir.glob("*.txt")):
        with open(path, "r", encoding="utf-8") as f:
            lines = [line.strip() for line in f if line.strip()]
        if not lines:
            continue
        name = path.stem
        if lines[0].startswith("[") and lines[0].endswith("]"):
            name = lines[0][1:-1].strip().lower()
            lines = lines[1:]
        lexicons.setdefault(name, set()).update(tok.lower() for tok in lines)
    return lexicons


class _Validator:
    """引用完整性检查"""

    def __init__(self, items: List[Item], vocab_size: int, catalog: Catalog):
        self.n_items = len(items)
        self.vocab_size = vocab_size
        self.catalog = catalog

    def item(self, item_id: int, source: str) -> None:
        if not 0 <= item_id < self.n_items:
            raise DanglingReferenceError("item", item_id, source)

    def token(self, token_id: int, source: str) -> None:
        if not 0 <= token_id < self.vocab_size:
            raise DanglingReferenceError("token", token_id, source)

    def attribute(self, kind: str, value: int, limit: int, source: str) -> None:
        if limit and not 0 <= value < limit:
            raise DanglingReferenceError(kind, value, source)


def load_corpus(
    corpus_dir: str,
    lexicon_dir: Optional[str] = None,
    max_realtime: int = 50,
    max_short: int = 100,
    max_long: int = 100,
    max_queries: int = 4,
) -> Corpus:
    """
    加载语料并校验

    Args:
        corpus_dir: 语料目录
        lexicon_dir: 词表目录，默认 corpus_dir/lexicons
        max_realtime / max_short / max_long: 行为序列上限（截断最旧部分）
        max_queries: 历史 query 上限 k

    Returns:
        只读 Corpus

    Raises:
        DataError: 文件缺失
        MalformedRecordError: 行解析失败
        DanglingReferenceError: 引用了不存在的实体
    """
    root = Path(corpus_dir)
    if not root.exists():
        raise DataError(f"语料目录不存在: {root}", code="FILE_NOT_FOUND",
                        suggestion="请先运行 shopradar gen-data")

    vocab = read_vocab(root / "vocab.txt")
    catalog_path = root / "catalog.json"
    catalog = Catalog()
    if catalog_path.exists():
        try:
            catalog = Catalog.from_dict(json.loads(catalog_path.read_text(encoding="utf-8")))
        except ValueError as e:
            raise MalformedRecordError(str(catalog_path), 1, str(e))

    items = read_jsonl(root / "items.jsonl", Item.from_dict, required=True)
    items.sort(key=lambda it: it.item_id)
    for expected, item in enumerate(items):
        if item.item_id != expected:
            raise DataError(f"商品 id 必须从 0 连续编号，第 {expected} 个商品的 id 为 {item.item_id}",
                            code="NON_CONTIGUOUS_ID")
        if not item.title_tokens:
            raise DataError(f"商品 {item.item_id} 标题为空", code="EMPTY_TITLE")

    check = _Validator(items, len(vocab), catalog)
    for item in items:
        src = f"items.jsonl item_id={item.item_id}"
        for tok in item.title_tokens:
            check.token(tok, src)
        check.attribute("category", item.category, len(catalog.categories), src)
        check.attribute("leaf_category", item.leaf_category, len(catalog.leaf_categories), src)
        check.attribute("brand", item.brand, len(catalog.brands), src)
        check.attribute("shop", item.shop, len(catalog.shops), src)

    users = {}
    for user in read_jsonl(root / "users.jsonl", UserLog.from_dict):
        src = f"users.jsonl user_id={user.user_id}"
        for item_id in user.realtime_seq + user.short_seq:
            check.item(item_id, src)
        limits = {"shop": len(catalog.shops), "leaf": len(catalog.leaf_categories), "brand": len(catalog.brands)}
        for act in ACTIONS:
            for item_id in user.long_seq("item", act):
                check.item(item_id, src)
            for attr in ATTRIBUTES[1:]:
                for value in user.long_seq(attr, act):
                    check.attribute(attr, value, limits[attr], src)
        for q in user.historical_queries:
            for tok in q:
                check.token(tok, src)
        users[user.user_id] = user.truncate(max_realtime, max_short, max_long, max_queries)

    queries = {q.query_id: q for q in read_jsonl(root / "queries.jsonl", Query.from_dict)}

    def check_click(click: ClickRecord, name: str) -> ClickRecord:
        src = f"{name} user_id={click.user_id}"
        check.item(click.clicked_item_id, src)
        for tok in click.query_tokens:
            check.token(tok, src)
        if users and click.user_id not in users:
            raise DanglingReferenceError("user", click.user_id, name)
        return click

    train = [check_click(c, "clicks_train.jsonl") for c in read_jsonl(root / "clicks_train.jsonl", ClickRecord.from_dict)]
    test = [check_click(c, "clicks_test.jsonl") for c in read_jsonl(root / "clicks_test.jsonl", ClickRecord.from_dict)]

    purchases = read_jsonl(root / "purchases_aux.jsonl", PurchaseRecord.from_dict)
    for p in purchases:
        check.item(p.item_id, "purchases_aux.jsonl")

    lexicons = read_lexicons(Path(lexicon_dir) if lexicon_dir else root / "lexicons")

    corpus = Corpus(
        items=items,
        users=users,
        queries=queries,
        train_clicks=train,
        test_clicks=test,
        purchases_aux=purchases,
        vocab=vocab,
        catalog=catalog,
        lexicons=lexicons,
    )
    logger.info(f"[语料] 加载完成: {corpus.stats()}")
    return corpus
