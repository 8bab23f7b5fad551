# coding=utf-8
"""
配置节模块 - 将加载后的配置字典转换为带校验的数据类

每个数据类提供：
- from_config(config): 从 load_config() 的结果构建
- validate(): 校验字段不变式，失败抛出 ConfigurationError
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigurationError


@dataclass
class GeneratorConfig:
    """合成语料生成配置"""

    n_items: int = 10000
    n_users: int = 2000
    n_queries: int = 3000
    vocab_size: int = 2400
    n_categories: int = 20
    n_leaf_per_category: int = 4
    n_brands: int = 60
    n_shops: int = 300
    n_train_clicks: int = 40000
    n_test_clicks: int = 2000
    noise_rate: float = 0.0
    history_queries: int = 4
    title_len: Tuple[int, int] = (4, 8)
    history_len: Tuple[int, int] = (20, 320)
    action_freq: Dict[str, float] = field(default_factory=lambda: {"click": 0.7, "buy": 0.1, "collect": 0.2})
    purchase_aux_rate: float = 0.3
    seed: int = 42

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "GeneratorConfig":
        c = config["CORPUS"]
        obj = cls(
            n_items=int(c["N_ITEMS"]),
            n_users=int(c["N_USERS"]),
            n_queries=int(c["N_QUERIES"]),
            vocab_size=int(c["VOCAB_SIZE"]),
            n_categories=int(c["N_CATEGORIES"]),
            n_leaf_per_category=int(c["N_LEAF_PER_CATEGORY"]),
            n_brands=int(c["N_BRANDS"]),
            n_shops=int(c["N_SHOPS"]),
            n_train_clicks=int(c["N_TRAIN_CLICKS"]),
            n_test_clicks=int(c["N_TEST_CLICKS"]),
            noise_rate=float(c["NOISE_RATE"]),
            history_queries=int(c["HISTORY_QUERIES"]),
            title_len=tuple(int(x) for x in c["TITLE_LEN"]),
            history_len=tuple(int(x) for x in c["HISTORY_LEN"]),
            action_freq={k: float(v) for k, v in c["ACTION_FREQ"].items()},
            purchase_aux_rate=float(c["PURCHASE_AUX_RATE"]),
            seed=int(config["APP"]["SEED"]),
        )
        obj.validate()
        return obj

    def validate(self) -> None:
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigurationError(f"noise_rate 必须在 [0,1] 内，当前 {self.noise_rate}")
        counts = {
            "n_items": self.n_items, "n_users": self.n_users, "n_queries": self.n_queries,
            "vocab_size": self.vocab_size, "n_categories": self.n_categories,
            "n_leaf_per_category": self.n_leaf_per_category, "n_brands": self.n_brands,
            "n_shops": self.n_shops, "history_queries": self.history_queries,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigurationError(f"{name} 必须 ≥ 1，当前 {value}")
        if self.n_train_clicks < 0 or self.n_test_clicks < 0:
            raise ConfigurationError("点击数量不能为负")
        lo, hi = self.title_len
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"title_len 区间无效: {self.title_len}")
        lo, hi = self.history_len
        if lo < 0 or hi < lo:
            raise ConfigurationError(f"history_len 区间无效: {self.history_len}")
        if set(self.action_freq) != {"click", "buy", "collect"} or sum(self.action_freq.values()) <= 0:
            raise ConfigurationError("action_freq 必须包含 click/buy/collect 且总和为正")
        if not 0.0 <= self.purchase_aux_rate <= 1.0:
            raise ConfigurationError("purchase_aux_rate 必须在 [0,1] 内")

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["title_len"] = list(self.title_len)
        d["history_len"] = list(self.history_len)
        return d


@dataclass
class ModelConfig:
    """双塔模型结构配置"""

    dim: int = 32
    heads: int = 8
    lstm_layers: int = 2
    lstm_dropout: float = 0.2
    ngram_buckets: int = 65536
    ffn_mult: int = 4
    feature_widths: Dict[str, int] = field(default_factory=dict)
    use_mgs: bool = True
    fusion: str = "transformer"
    query_attention_scaled: bool = False
    self_attention_scaled: bool = True
    max_realtime: int = 50
    max_short: int = 100
    max_long: int = 100

    FEATURES = ("item", "leaf", "category", "brand", "shop")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "ModelConfig":
        m = config["MODEL"]
        obj = cls(
            dim=int(m["DIM"]),
            heads=int(m["HEADS"]),
            lstm_layers=int(m["LSTM_LAYERS"]),
            lstm_dropout=float(m["LSTM_DROPOUT"]),
            ngram_buckets=int(m["NGRAM_BUCKETS"]),
            ffn_mult=int(m["FFN_MULT"]),
            feature_widths={k: int(v) for k, v in m["FEATURE_WIDTHS"].items()},
            use_mgs=bool(m["USE_MGS"]),
            fusion=str(m["FUSION"]),
            query_attention_scaled=bool(m["QUERY_ATTENTION_SCALED"]),
            self_attention_scaled=bool(m["SELF_ATTENTION_SCALED"]),
            max_realtime=int(m["MAX_REALTIME"]),
            max_short=int(m["MAX_SHORT"]),
            max_long=int(m["MAX_LONG"]),
        )
        obj.validate()
        return obj

    def resolved_widths(self) -> Dict[str, int]:
        """各行为特征的嵌入宽度 d_f（item 0.5d，其余各 0.125d，至少为 1）"""
        defaults = {
            "item": max(1, self.dim // 2),
            "leaf": max(1, self.dim // 8),
            "category": max(1, self.dim // 8),
            "brand": max(1, self.dim // 8),
            "shop": max(1, self.dim // 8),
        }
        defaults.update(self.feature_widths)
        return {f: defaults[f] for f in self.FEATURES}

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigurationError(f"dim 必须 ≥ 1，当前 {self.dim}")
        if self.heads < 1 or self.dim % self.heads != 0:
            raise ConfigurationError(f"dim={self.dim} 必须能被 heads={self.heads} 整除")
        if self.lstm_layers < 1:
            raise ConfigurationError("lstm_layers 必须 ≥ 1")
        if not 0.0 <= self.lstm_dropout < 1.0:
            raise ConfigurationError("lstm_dropout 必须在 [0,1) 内")
        if self.ngram_buckets < 2:
            raise ConfigurationError("ngram_buckets 必须 ≥ 2")
        if self.fusion not in ("transformer", "mean"):
            raise ConfigurationError(f"fusion 只支持 transformer/mean，当前 {self.fusion}")
        unknown = set(self.feature_widths) - set(self.FEATURES)
        if unknown:
            raise ConfigurationError(f"feature_widths 含未知特征: {sorted(unknown)}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LossConfig:
    """损失函数配置"""

    temperature: float = 2.0
    hard_neg_count: int = 684
    mix_bounds: Tuple[float, float] = (0.4, 0.6)
    loss_kind: str = "softmax"
    margin: float = 0.1

    def validate(self) -> None:
        if self.loss_kind not in ("softmax", "hinge"):
            raise ConfigurationError(f"loss 只支持 softmax/hinge，当前 {self.loss_kind}")
        if self.temperature <= 0:
            raise ConfigurationError(f"温度 τ 必须 > 0，当前 {self.temperature}")
        if self.hard_neg_count < 0:
            raise ConfigurationError("hard_negatives 不能为负")
        a, b = self.mix_bounds
        if not (0.0 <= a < b <= 1.0):
            raise ConfigurationError(f"mix_bounds 需满足 0 ≤ a < b ≤ 1，当前 {self.mix_bounds}")
        if self.loss_kind == "hinge" and self.margin <= 0:
            raise ConfigurationError(f"hinge margin 必须 > 0，当前 {self.margin}")


@dataclass
class TrainConfig:
    """训练循环配置"""

    loss: LossConfig = field(default_factory=LossConfig)
    shared_negatives: int = 2048
    batch_size: int = 256
    epochs: int = 1
    max_steps: int = 0
    learning_rate: float = 0.1
    clip_norm: float = 3.0
    eval_every: int = 50
    eval_queries: int = 200
    eval_k: int = 100
    hinge_margins: List[float] = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.5])
    seed: int = 42

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "TrainConfig":
        t = config["TRAINING"]
        obj = cls(
            loss=LossConfig(
                temperature=float(t["TEMPERATURE"]),
                hard_neg_count=int(t["HARD_NEGATIVES"]),
                mix_bounds=(float(t["MIX_BOUNDS"][0]), float(t["MIX_BOUNDS"][1])),
                loss_kind=str(t["LOSS"]),
                margin=float(t["HINGE_MARGIN"]),
            ),
            shared_negatives=int(t["SHARED_NEGATIVES"]),
            batch_size=int(t["BATCH_SIZE"]),
            epochs=int(t["EPOCHS"]),
            max_steps=int(t["MAX_STEPS"]),
            learning_rate=float(t["LEARNING_RATE"]),
            clip_norm=float(t["CLIP_NORM"]),
            eval_every=int(t["EVAL_EVERY"]),
            eval_queries=int(t["EVAL_QUERIES"]),
            eval_k=int(t["EVAL_K"]),
            hinge_margins=[float(x) for x in t["HINGE_MARGINS"]],
            seed=int(config["APP"]["SEED"]),
        )
        obj.validate()
        return obj

    def validate(self) -> None:
        self.loss.validate()
        if self.batch_size < 1 or self.shared_negatives < 1:
            raise ConfigurationError("batch_size 与 shared_negatives 必须 ≥ 1")
        if self.shared_negatives < self.loss.hard_neg_count:
            raise ConfigurationError(
                f"共享负样本数 S={self.shared_negatives} 必须 ≥ 困难负样本数 N={self.loss.hard_neg_count}"
            )
        if self.learning_rate <= 0 or self.clip_norm <= 0:
            raise ConfigurationError("learning_rate 与 clip_norm 必须 > 0")
        if self.epochs < 0 or self.max_steps < 0:
            raise ConfigurationError("epochs 与 max_steps 不能为负")


@dataclass
class IndexConfig:
    """ANN 索引配置"""

    n_columns: int = 6
    branching: int = 8
    depth: int = 2
    leaf_cap: int = 64
    max_scan_ratio: float = 0.01
    kmeans_sample_cap: int = 4_000_000
    kmeans_iterations: int = 20
    per_column_k: int = 0
    seed: int = 42

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "IndexConfig":
        i = config["INDEX"]
        obj = cls(
            n_columns=int(i["N_COLUMNS"]),
            branching=int(i["BRANCHING"]),
            depth=int(i["DEPTH"]),
            leaf_cap=int(i["LEAF_CAP"]),
            max_scan_ratio=float(i["MAX_SCAN_RATIO"]),
            kmeans_sample_cap=int(i["KMEANS_SAMPLE_CAP"]),
            kmeans_iterations=int(i["KMEANS_ITERATIONS"]),
            per_column_k=int(i["PER_COLUMN_K"]),
            seed=int(config["APP"]["SEED"]),
        )
        obj.validate()
        return obj

    def validate(self) -> None:
        if self.n_columns < 1:
            raise ConfigurationError(f"n_columns 必须 ≥ 1，当前 {self.n_columns}")
        if not 0.0 < self.max_scan_ratio <= 1.0:
            raise ConfigurationError(f"max_scan_ratio 必须在 (0,1] 内，当前 {self.max_scan_ratio}")
        if self.branching < 2 or self.depth < 0 or self.leaf_cap < 1:
            raise ConfigurationError("branching ≥ 2、depth ≥ 0、leaf_cap ≥ 1")
        if self.kmeans_sample_cap < 1 or self.kmeans_iterations < 1:
            raise ConfigurationError("kmeans_sample_cap 与 kmeans_iterations 必须 ≥ 1")
        if self.per_column_k < 0:
            raise ConfigurationError("per_column_k 不能为负")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RelevanceConfig:
    """相关性控制配置：必选关键词类别 + 词表目录"""

    mandatory: Dict[str, bool] = field(default_factory=lambda: {
        "brand": True, "category": True, "color": False, "style": False, "audience": False,
    })
    lexicon_dir: str = ""

    CLASSES = ("brand", "category", "color", "style", "audience")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "RelevanceConfig":
        obj = cls(
            mandatory={k.lower(): bool(v) for k, v in config["RELEVANCE"]["MANDATORY"].items()},
            lexicon_dir=config["PATHS"]["LEXICON_DIR"],
        )
        obj.validate()
        return obj

    def validate(self) -> None:
        unknown = set(self.mandatory) - set(self.CLASSES)
        if unknown:
            raise ConfigurationError(f"未知关键词类别: {sorted(unknown)}")


@dataclass
class FunnelConfig:
    """下游漏斗（粗排/精排）保留比例"""

    prerank_keep: float = 1.0
    rank_keep: float = 0.34
    seed: int = 42

    def validate(self) -> None:
        for name, value in (("prerank_keep", self.prerank_keep), ("rank_keep", self.rank_keep)):
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"{name} 必须在 (0,1] 内，当前 {value}")


@dataclass
class EvalConfig:
    """离线评估配置"""

    recall_k: int = 100
    good_k: int = 100
    scan_ratio: float = 0.2
    max_queries: int = 1000
    funnel: FunnelConfig = field(default_factory=FunnelConfig)
    tau_values: List[float] = field(default_factory=lambda: [0.1, 0.5, 1.0, 2.0, 5.0])
    hard_negative_values: List[int] = field(default_factory=lambda: [0, 64, 256])
    sweep_steps: int = 300
    seed: int = 42

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "EvalConfig":
        e = config["EVAL"]
        seed = int(config["APP"]["SEED"])
        obj = cls(
            recall_k=int(e["RECALL_K"]),
            good_k=int(e["GOOD_K"]),
            scan_ratio=float(e["SCAN_RATIO"]),
            max_queries=int(e["MAX_QUERIES"]),
            funnel=FunnelConfig(float(e["PRERANK_KEEP"]), float(e["RANK_KEEP"]), seed),
            tau_values=[float(x) for x in e["TAU_VALUES"]],
            hard_negative_values=[int(x) for x in e["HARD_NEGATIVE_VALUES"]],
            sweep_steps=int(e["SWEEP_STEPS"]),
            seed=seed,
        )
        obj.validate()
        return obj

    def validate(self) -> None:
        self.funnel.validate()
        if self.recall_k < 1 or self.good_k < 1:
            raise ConfigurationError("recall_k 与 good_k 必须 ≥ 1")
        if not 0.0 < self.scan_ratio <= 1.0:
            raise ConfigurationError(f"scan_ratio 必须在 (0,1] 内，当前 {self.scan_ratio}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class PipelineConfig:
    """端到端流水线配置（路径 + 各阶段配置 + 统一种子）"""

    corpus_dir: str
    checkpoint: str
    metrics: str
    embeddings: str
    index_dir: str
    report_dir: str
    lexicon_dir: str
    generator: GeneratorConfig
    model: ModelConfig
    training: TrainConfig
    index: IndexConfig
    evaluation: EvalConfig
    relevance: RelevanceConfig
    serve_host: str = "127.0.0.1"
    serve_port: int = 7788
    serve_default_k: int = 0
    serve_scan_ratio: float = 0.2
    seed: int = 42

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "PipelineConfig":
        p = config["PATHS"]
        s = config["SERVE"]
        return cls(
            corpus_dir=p["CORPUS_DIR"],
            checkpoint=p["CHECKPOINT"],
            metrics=p["METRICS"],
            embeddings=p["EMBEDDINGS"],
            index_dir=p["INDEX_DIR"],
            report_dir=p["REPORT_DIR"],
            lexicon_dir=p["LEXICON_DIR"],
            generator=GeneratorConfig.from_config(config),
            model=ModelConfig.from_config(config),
            training=TrainConfig.from_config(config),
            index=IndexConfig.from_config(config),
            evaluation=EvalConfig.from_config(config),
            relevance=RelevanceConfig.from_config(config),
            serve_host=str(s["HOST"]),
            serve_port=int(s["PORT"]),
            serve_default_k=int(s["DEFAULT_K"]),
            serve_scan_ratio=float(s["SCAN_RATIO"]),
            seed=int(config["APP"]["SEED"]),
        )

    def serve_k(self, n_items: int) -> int:
        """在线默认 K：min(9600, 商品数/10)，至少为列数"""
        if self.serve_default_k > 0:
            return self.serve_default_k
        return max(self.index.n_columns, min(9600, n_items // 10))


def ceil_div(a: int, b: int) -> int:
    """向上取整除法"""
    return -(-a // b)


def scan_budget(ratio: float, size: int) -> int:
    """单列扫描上限 ceil(ratio · size)，至少 1"""
    return max(1, int(math.ceil(ratio * size - 1e-9)))
