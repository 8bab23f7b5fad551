# coding=utf-8
"""
关键词抽取

query 词按类别词表打标签，同一个词落在多个词表时按
brand > category > color > style > audience 的优先级取第一个；
只有属于启用类别（mandatory）的词才成为必选词，未打标签的词永远不是必选词。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

from shopradar.core.config import RelevanceConfig
from shopradar.relevance.inverted import attribute_term

PRECEDENCE = RelevanceConfig.CLASSES


@dataclass
class KeyTermRule:
    """必选类别开关 + 各类别词表"""

    mandatory: Dict[str, bool] = field(default_factory=lambda: dict(RelevanceConfig().mandatory))
    lexicons: Dict[str, Set[str]] = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: RelevanceConfig, lexicons: Dict[str, Set[str]]) -> "KeyTermRule":
        return cls(mandatory=dict(config.mandatory), lexicons={k: set(v) for k, v in lexicons.items()})

    def tag(self, token: str) -> Optional[str]:
        """词的类别标签，没有命中任何词表时返回 None"""
        token = token.lower()
        for cls_name in PRECEDENCE:
            if token in self.lexicons.get(cls_name, ()):
                return cls_name
        return None


def extract_key_terms(query_tokens: Sequence[str], rule: KeyTermRule) -> List[str]:
    """
    Args:
        query_tokens: 分词后的 query（词文本）
        rule: 关键词规则

    Returns:
        必选词项列表，形如 "brand:adidas"，按 query 中首次出现顺序去重

    Examples:
        >>> rule = KeyTermRule(lexicons={"brand": {"adidas"}, "category": {"shoes"}})
        >>> extract_key_terms(["adidas", "shoes"], rule)
        ['brand:adidas', 'category:shoes']
    """
    required: List[str] = []
    for token in query_tokens:
        cls_name = rule.tag(token)
        if cls_name is None or not rule.mandatory.get(cls_name, False):
            continue
        term = attribute_term(cls_name, token.lower())
        if term not in required:
            required.append(term)
    return required


def split_term(term: str) -> tuple:
    """"brand:adidas" → ("brand", "adidas")"""
    kind, _, value = term.partition(":")
    return kind, value
