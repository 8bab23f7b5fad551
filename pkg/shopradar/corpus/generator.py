# coding=utf-8
"""
合成语料生成器

埋入可验证的相关性结构：
- 每个类目拥有互不相交的主题词池，叶子类目偏好池内的子集
- 标题 = 品牌词 + 主题词（不含类目名）
- query = 目标商品标题中的 1~4 个词 + 类目词
- good = 同类目且与 query 至少共享一个标题词
- 比例为 noise_rate 的点击落在其他类目的商品上（label=bad）

同一 seed 两次生成的文件逐字节一致。
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from shopradar.core.config import GeneratorConfig
from shopradar.core.errors import ConfigurationError
from shopradar.corpus.models import (
    ACTIONS,
    ATTRIBUTES,
    Catalog,
    ClickRecord,
    Item,
    PurchaseRecord,
    Query,
    UserLog,
)

logger = logging.getLogger(__name__)

OOV_TOKEN = "<oov>"
SYLLABLES = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "ka", "ke", "ki", "ko", "ku",
    "la", "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
    "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu",
    "va", "ve", "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu",
]
EXTRA_CLASSES = ("color", "style", "audience")
EXTRA_CLASS_SIZE = 8
MIN_TOPIC_PER_CATEGORY = 8
QUERY_TOKEN_COUNTS = (1, 2, 3, 4)
QUERY_TOKEN_PROBS = (0.5, 0.3, 0.15, 0.05)
REALTIME_HORIZON = 50
SHORT_HORIZON = 100
TIME_STEP = 60


def _make_words(rng: np.random.Generator, count: int) -> List[str]:
    """生成 count 个互不相同的音节词（2~3 个音节）"""
    words: List[str] = []
    seen = set()
    while len(words) < count:
        n_syl = 2 if rng.random() < 0.6 else 3
        word = "".join(SYLLABLES[i] for i in rng.integers(0, len(SYLLABLES), size=n_syl))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _dump_jsonl(path: Path, records: Sequence) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":")))
            f.write("\n")


class CorpusGenerator:
    """
    合成语料生成器

    Args:
        config: 生成配置
    """

    def __init__(self, config: GeneratorConfig):
        config.validate()
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        n_fixed = 1 + config.n_categories + config.n_brands + EXTRA_CLASS_SIZE * len(EXTRA_CLASSES)
        self.n_topic = config.vocab_size - n_fixed
        if self.n_topic < MIN_TOPIC_PER_CATEGORY * config.n_categories:
            raise ConfigurationError(
                f"词表过小: vocab_size={config.vocab_size} 无法为 {config.n_categories} 个类目"
                f"各分配至少 {MIN_TOPIC_PER_CATEGORY} 个主题词",
                suggestion=f"vocab_size 至少需要 {n_fixed + MIN_TOPIC_PER_CATEGORY * config.n_categories}",
            )

    # =====================
    # 词表与类目结构
    # =====================

    def _build_vocab(self) -> None:
        cfg = self.config
        words = _make_words(self.rng, cfg.vocab_size - 1)
        self.vocab: List[str] = [OOV_TOKEN] + words
        cursor = 1
        self.category_token = list(range(cursor, cursor + cfg.n_categories))
        cursor += cfg.n_categories
        self.brand_token = list(range(cursor, cursor + cfg.n_brands))
        cursor += cfg.n_brands
        self.extra_tokens: Dict[str, List[int]] = {}
        for cls in EXTRA_CLASSES:
            self.extra_tokens[cls] = list(range(cursor, cursor + EXTRA_CLASS_SIZE))
            cursor += EXTRA_CLASS_SIZE
        topic = np.arange(cursor, cfg.vocab_size)
        self.topic_pools: List[np.ndarray] = np.array_split(topic, cfg.n_categories)

        # 品牌 / 店铺只在部分类目经营
        per_cat_brands = max(2, (cfg.n_brands * 3) // cfg.n_categories)
        per_cat_shops = max(2, (cfg.n_shops * 2) // cfg.n_categories)
        self.category_brands = [
            np.sort(self.rng.choice(cfg.n_brands, size=min(per_cat_brands, cfg.n_brands), replace=False))
            for _ in range(cfg.n_categories)
        ]
        self.category_shops = [
            np.sort(self.rng.choice(cfg.n_shops, size=min(per_cat_shops, cfg.n_shops), replace=False))
            for _ in range(cfg.n_categories)
        ]

    def _catalog(self) -> Catalog:
        cfg = self.config
        categories = [self.vocab[t] for t in self.category_token]
        return Catalog(
            categories=categories,
            leaf_categories=[
                f"{categories[c]}-{j}" for c in range(cfg.n_categories) for j in range(cfg.n_leaf_per_category)
            ],
            brands=[self.vocab[t] for t in self.brand_token],
            shops=[f"shop{s:05d}" for s in range(cfg.n_shops)],
        )

    # =====================
    # 商品
    # =====================

    def _build_items(self) -> List[Item]:
        cfg = self.config
        items = []
        lo, hi = cfg.title_len
        for item_id in range(cfg.n_items):
            category = int(self.rng.integers(cfg.n_categories))
            leaf_j = int(self.rng.integers(cfg.n_leaf_per_category))
            leaf = category * cfg.n_leaf_per_category + leaf_j
            pool = self.topic_pools[category]
            leaf_pool = pool[leaf_j::cfg.n_leaf_per_category]
            if leaf_pool.size == 0:
                leaf_pool = pool
            brand = int(self.rng.choice(self.category_brands[category]))
            shop = int(self.rng.choice(self.category_shops[category]))

            n_topic = int(self.rng.integers(max(1, lo - 1), max(1, hi - 1) + 1))
            tokens: List[int] = [self.brand_token[brand]]
            for _ in range(n_topic):
                source = leaf_pool if self.rng.random() < 0.7 else pool
                tok = int(self.rng.choice(source))
                if tok not in tokens:
                    tokens.append(tok)
            if self.rng.random() < 0.5:
                cls = EXTRA_CLASSES[int(self.rng.integers(len(EXTRA_CLASSES)))]
                tokens.append(int(self.rng.choice(self.extra_tokens[cls])))
            order = self.rng.permutation(len(tokens))
            items.append(Item(
                item_id=item_id,
                title_tokens=[tokens[i] for i in order],
                category=category,
                leaf_category=leaf,
                brand=brand,
                shop=shop,
            ))
        return items

    def _index_items(self, items: List[Item]) -> None:
        """类目 → 词 → 商品 的倒排，用于挑选相关商品"""
        cfg = self.config
        self.items_by_category: List[List[int]] = [[] for _ in range(cfg.n_categories)]
        self.cat_token_items: List[Dict[int, List[int]]] = [dict() for _ in range(cfg.n_categories)]
        for item in items:
            self.items_by_category[item.category].append(item.item_id)
            bucket = self.cat_token_items[item.category]
            for tok in set(item.title_tokens):
                bucket.setdefault(tok, []).append(item.item_id)

    def relevant_items(self, category: int, tokens: Sequence[int]) -> List[int]:
        """同类目且共享至少一个标题词的商品（升序）"""
        bucket = self.cat_token_items[category]
        found = set()
        for tok in tokens:
            found.update(bucket.get(tok, ()))
        return sorted(found)

    # =====================
    # Query
    # =====================

    def _build_queries(self, items: List[Item]) -> List[Query]:
        cfg = self.config
        queries = []
        for query_id in range(cfg.n_queries):
            source = items[int(self.rng.integers(len(items)))]
            n_tok = int(self.rng.choice(QUERY_TOKEN_COUNTS, p=QUERY_TOKEN_PROBS))
            n_tok = min(n_tok, len(source.title_tokens))
            picked = self.rng.choice(len(source.title_tokens), size=n_tok, replace=False)
            tokens = [source.title_tokens[i] for i in sorted(picked)]
            tokens.append(self.category_token[source.category])
            queries.append(Query(
                query_id=query_id,
                tokens=tokens,
                text=" ".join(self.vocab[t] for t in tokens),
                category=source.category,
                source_item=source.item_id,
            ))
        return queries

    # =====================
    # 用户
    # =====================

    def _build_users(self, items: List[Item], queries: List[Query]) -> List[UserLog]:
        cfg = self.config
        self.queries_by_category: List[List[int]] = [[] for _ in range(cfg.n_categories)]
        for q in queries:
            self.queries_by_category[q.category].append(q.query_id)

        freq = np.array([cfg.action_freq[a] for a in ACTIONS], dtype=np.float64)
        freq = freq / freq.sum()
        users = []
        lo, hi = cfg.history_len
        for user_id in range(cfg.n_users):
            n_pref = int(self.rng.integers(1, 4))
            prefs = sorted(int(c) for c in self.rng.choice(cfg.n_categories, size=min(n_pref, cfg.n_categories),
                                                            replace=False))
            length = int(self.rng.integers(lo, hi + 1))
            timeline: List[Tuple[int, str]] = []
            for _ in range(length):
                if self.rng.random() < 0.8:
                    cat = prefs[int(self.rng.integers(len(prefs)))]
                else:
                    cat = int(self.rng.integers(cfg.n_categories))
                pool = self.items_by_category[cat] or list(range(len(items)))
                item_id = int(pool[int(self.rng.integers(len(pool)))])
                action = ACTIONS[int(self.rng.choice(len(ACTIONS), p=freq))]
                timeline.append((item_id, action))

            # 最新 50 条 → 实时，其后 100 条 → 短期，更早 → 长期（按动作拆分）
            realtime = [i for i, _ in timeline[-REALTIME_HORIZON:]] if timeline else []
            rest = timeline[:-REALTIME_HORIZON] if len(timeline) > REALTIME_HORIZON else []
            short = [i for i, _ in rest[-SHORT_HORIZON:]]
            older = rest[:-SHORT_HORIZON] if len(rest) > SHORT_HORIZON else []
            long_items = {act: [i for i, a in older if a == act] for act in ACTIONS}
            attr_of = {
                "item": lambda i: i,
                "shop": lambda i: items[i].shop,
                "leaf": lambda i: items[i].leaf_category,
                "brand": lambda i: items[i].brand,
            }
            long_attr = {
                attr: {act: [int(attr_of[attr](i)) for i in long_items[act]] for act in ACTIONS}
                for attr in ATTRIBUTES
            }

            history = []
            for _ in range(cfg.history_queries):
                cat = prefs[int(self.rng.integers(len(prefs)))]
                pool = self.queries_by_category[cat]
                if pool:
                    history.append(list(queries[pool[int(self.rng.integers(len(pool)))]].tokens))

            users.append(UserLog(
                user_id=user_id,
                realtime_seq=realtime,
                short_seq=short,
                long_attr_seqs=long_attr,
                historical_queries=history,
                preferred_categories=prefs,
            ))
        return users

    # =====================
    # 点击
    # =====================

    def _pick_query(self, user: UserLog, n_queries: int) -> int:
        if self.rng.random() < 0.7:
            cat = user.preferred_categories[int(self.rng.integers(len(user.preferred_categories)))]
            pool = self.queries_by_category[cat]
            if pool:
                return int(pool[int(self.rng.integers(len(pool)))])
        return int(self.rng.integers(n_queries))

    def _noise_item(self, category: int, n_items: int) -> int:
        """随机挑一个其他类目的商品"""
        for _ in range(64):
            item_id = int(self.rng.integers(n_items))
            if self.item_category[item_id] != category:
                return item_id
        others = np.flatnonzero(self.item_category != category)
        return int(others[int(self.rng.integers(others.size))])

    def _build_clicks(self, users: List[UserLog], queries: List[Query], items: List[Item]):
        cfg = self.config
        self.item_category = np.array([it.category for it in items], dtype=np.int64)
        can_be_noisy = cfg.n_categories > 1
        total = cfg.n_train_clicks + cfg.n_test_clicks
        base_time = 1_700_000_000
        clicks: List[ClickRecord] = []
        purchases: List[PurchaseRecord] = []
        for k in range(total):
            user = users[int(self.rng.integers(len(users)))]
            query = queries[self._pick_query(user, len(queries))]
            timestamp = base_time + k * TIME_STEP
            noisy = can_be_noisy and self.rng.random() < cfg.noise_rate
            if noisy:
                clicked = self._noise_item(query.category, len(items))
                label = "bad"
            else:
                relevant = self.relevant_items(query.category, query.tokens)
                clicked = relevant[int(self.rng.integers(len(relevant)))]
                label = "good"
            clicks.append(ClickRecord(
                user_id=user.user_id,
                query_id=query.query_id,
                query_tokens=list(query.tokens),
                query_category=query.category,
                clicked_item_id=int(clicked),
                timestamp=timestamp,
                relevance_label=label,
            ))
            if k >= cfg.n_train_clicks and self.rng.random() < cfg.purchase_aux_rate:
                relevant = self.relevant_items(query.category, query.tokens)
                purchases.append(PurchaseRecord(
                    user_id=user.user_id,
                    query_id=query.query_id,
                    item_id=int(relevant[int(self.rng.integers(len(relevant)))]),
                    timestamp=timestamp + TIME_STEP // 2,
                ))
        return clicks[:cfg.n_train_clicks], clicks[cfg.n_train_clicks:], purchases

    # =====================
    # 入口
    # =====================

    def generate(self, output_dir: str) -> Dict[str, int]:
        """
        生成全部语料文件

        Args:
            output_dir: 输出目录

        Returns:
            各文件记录数
        """
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)

        self._build_vocab()
        catalog = self._catalog()
        items = self._build_items()
        self._index_items(items)
        queries = self._build_queries(items)
        users = self._build_users(items, queries)
        train, test, purchases = self._build_clicks(users, queries, items)

        with open(out / "vocab.txt", "w", encoding="utf-8", newline="\n") as f:
            for token in self.vocab:
                f.write(token + "\n")
        with open(out / "catalog.json", "w", encoding="utf-8", newline="\n") as f:
            json.dump(catalog.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        _dump_jsonl(out / "items.jsonl", items)
        _dump_jsonl(out / "users.jsonl", users)
        _dump_jsonl(out / "queries.jsonl", queries)
        _dump_jsonl(out / "clicks_train.jsonl", train)
        _dump_jsonl(out / "clicks_test.jsonl", test)
        _dump_jsonl(out / "purchases_aux.jsonl", purchases)

        lexicon_dir = out / "lexicons"
        lexicon_dir.mkdir(exist_ok=True)
        lexicons = {
            "brand": [self.vocab[t] for t in self.brand_token],
            "category": [self.vocab[t] for t in self.category_token],
        }
        for cls in EXTRA_CLASSES:
            lexicons[cls] = [self.vocab[t] for t in self.extra_tokens[cls]]
        for cls, tokens in lexicons.items():
            with open(lexicon_dir / f"{cls}.txt", "w", encoding="utf-8", newline="\n") as f:
                f.write(f"[{cls}]\n")
                for token in tokens:
                    f.write(token + "\n")

        counts = {
            "items": len(items),
            "users": len(users),
            "queries": len(queries),
            "clicks_train": len(train),
            "clicks_test": len(test),
            "purchases_aux": len(purchases),
            "vocab": len(self.vocab),
        }
        bad = sum(1 for c in train + test if c.relevance_label == "bad")
        logger.info(f"[语料] 已生成 {counts}，噪声点击 {bad} 条，输出目录 {out}")
        return counts


def generate(config: GeneratorConfig, output_dir: str) -> Dict[str, int]:
    """按配置生成语料文件（确定性）"""
    return CorpusGenerator(config).generate(output_dir)
