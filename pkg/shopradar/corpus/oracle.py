# coding=utf-8
"""
相关性真值

good 的定义：与 query 意图同类目，且标题与 query 至少共享一个词。
另提供暴力词面匹配器，作为生成器自身的可恢复性检查。
"""

from typing import Dict, List, Sequence, Set, Tuple

import numpy as np

from shopradar.corpus.models import Corpus


def is_good(corpus: Corpus, item_id: int, query_tokens: Sequence[int], query_category: int) -> bool:
    item = corpus.item(item_id)
    if item.category != query_category:
        return False
    return not set(item.title_tokens).isdisjoint(query_tokens)


def relevance_labels(corpus: Corpus, item_ids: Sequence[int], query_tokens: Sequence[int],
                     query_category: int) -> List[bool]:
    """批量真值标签，与 item_ids 顺序一致"""
    tokens = set(query_tokens)
    labels = []
    for item_id in item_ids:
        item = corpus.item(int(item_id))
        labels.append(item.category == query_category and not tokens.isdisjoint(item.title_tokens))
    return labels


def relevant_set(corpus: Corpus, query_tokens: Sequence[int], query_category: int) -> Set[int]:
    """全部相关商品"""
    tokens = set(query_tokens)
    return {
        it.item_id for it in corpus.items
        if it.category == query_category and not tokens.isdisjoint(it.title_tokens)
    }


def lexical_retrieve(corpus: Corpus, query_tokens: Sequence[int], query_category: int, k: int) -> List[int]:
    """
    暴力词面检索：同类目商品按共享标题词数降序、id 升序取前 k 个

    没有共享词的商品不会被返回。
    """
    tokens = set(query_tokens)
    scored: List[Tuple[int, int]] = []
    for item_id in np.flatnonzero(corpus.item_category == query_category):
        overlap = len(tokens.intersection(corpus.items[item_id].title_tokens))
        if overlap:
            scored.append((-overlap, int(item_id)))
    scored.sort()
    return [item_id for _, item_id in scored[:k]]


def lexical_recall(corpus: Corpus, k: int = 100) -> float:
    """
    暴力词面匹配器在测试点击上的 Recall@K

    目标集合按 (user, query) 分组，包含点击与站外购买。
    """
    targets: Dict[Tuple[int, int], Set[int]] = {}
    meta: Dict[Tuple[int, int], Tuple[List[int], int]] = {}
    for click in corpus.test_clicks:
        key = (click.user_id, click.query_id)
        targets.setdefault(key, set()).add(click.clicked_item_id)
        meta[key] = (click.query_tokens, click.query_category)
    for p in corpus.purchases_aux:
        key = (p.user_id, p.query_id)
        if key in targets:
            targets[key].add(p.item_id)
    if not targets:
        return 0.0
    total = 0.0
    for key, target in targets.items():
        tokens, category = meta[key]
        retrieved = set(lexical_retrieve(corpus, tokens, category, k))
        total += len(retrieved & target) / len(target)
    return total / len(targets)
