# coding=utf-8
"""
倒排索引

词项包括标题词（文本形式）以及属性词 brand:<品牌> 与 category:<类目>，
每个词项的倒排表为严格升序的商品 id 列表。
"""

import heapq
from typing import Dict, Iterable, List, Sequence

from shopradar.corpus.models import Corpus, Item


def attribute_term(kind: str, value: str) -> str:
    return f"{kind}:{value}"


def intersect_sorted(postings: Sequence[Sequence[int]]) -> List[int]:
    """
    多路有序交集：从最短的表开始逐表做双指针归并

    Examples:
        >>> intersect_sorted([[1, 3, 5, 7], [3, 4, 5], [0, 3, 5, 9]])
        [3, 5]
    """
    if not postings:
        return []
    ordered = sorted(postings, key=len)
    result = list(ordered[0])
    for other in ordered[1:]:
        merged = []
        i, j = 0, 0
        while i < len(result) and j < len(other):
            if result[i] == other[j]:
                merged.append(result[i])
                i += 1
                j += 1
            elif result[i] < other[j]:
                i += 1
            else:
                j += 1
        result = merged
        if not result:
            break
    return result


def union_sorted(postings: Iterable[Sequence[int]]) -> List[int]:
    """有序并集（去重）"""
    result: List[int] = []
    for item_id in heapq.merge(*postings):
        if not result or result[-1] != item_id:
            result.append(item_id)
    return result


class InvertedIndex:
    """词项 → 升序商品 id 列表（构建后只读）"""

    def __init__(self, postings: Dict[str, List[int]], n_items: int):
        self._postings = postings
        self.n_items = n_items

    def postings(self, term: str) -> List[int]:
        return self._postings.get(term, [])

    def contains(self, term: str, item_id: int) -> bool:
        plist = self._postings.get(term)
        if not plist:
            return False
        lo, hi = 0, len(plist)
        while lo < hi:
            mid = (lo + hi) // 2
            if plist[mid] < item_id:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(plist) and plist[lo] == item_id

    def terms(self) -> List[str]:
        return sorted(self._postings)

    def __len__(self) -> int:
        return len(self._postings)

    def stats(self) -> Dict[str, int]:
        return {
            "terms": len(self._postings),
            "postings": sum(len(p) for p in self._postings.values()),
            "items": self.n_items,
        }


def item_terms(corpus: Corpus, item: Item) -> List[str]:
    """商品的全部词项（去重，保持首次出现顺序）"""
    terms = [corpus.token_text(t) for t in item.title_tokens]
    if 0 <= item.brand < len(corpus.catalog.brands):
        terms.append(attribute_term("brand", corpus.catalog.brands[item.brand].lower()))
    if 0 <= item.category < len(corpus.catalog.categories):
        terms.append(attribute_term("category", corpus.catalog.categories[item.category].lower()))
    return list(dict.fromkeys(terms))


def build_inverted_index(corpus: Corpus) -> InvertedIndex:
    """按 item_id 升序遍历，倒排表天然有序且不重复"""
    postings: Dict[str, List[int]] = {}
    for item in corpus.items:
        for term in item_terms(corpus, item):
            postings.setdefault(term, []).append(item.item_id)
    return InvertedIndex(postings, corpus.n_items)
