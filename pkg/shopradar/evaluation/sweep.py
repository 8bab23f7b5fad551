# coding=utf-8
"""
参数扫描与对比实验

- run_sweep: 沿 τ 或 N 轴逐个取值训练并评估，输出 (value, p_good, recall)
- run_ablation: 组件消融（多粒度语义单元 / Transformer 融合 / 温度 / 困难负样本）
- run_convergence: softmax 与各 hinge margin 的收敛曲线对比

所有变体使用相同的种子与训练步数，评估使用精确检索，排除 ANN 近似的影响。
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from shopradar.core.config import ModelConfig, PipelineConfig, TrainConfig
from shopradar.core.errors import DataError, InvalidParameterError
from shopradar.corpus.models import Corpus
from shopradar.evaluation.harness import EvalReport, Evaluator
from shopradar.model.towers import TwoTowerModel
from shopradar.relevance.key_terms import KeyTermRule
from shopradar.report.writer import write_csv
from shopradar.training.trainer import Trainer, TrainResult

logger = logging.getLogger(__name__)

SWEEP_AXES = ("tau", "N_hard")
SWEEP_HEADER = ["axis", "value", "p_good", "recall"]
ABLATION_HEADER = ["variant", "recall", "p_good"]
ABLATION_VARIANTS = ("base", "+mgs", "+trm", "+tau", "+mgs+trm+tau", "+imix", "all")


@dataclass
class SweepRow:
    axis: str
    value: float
    p_good: float
    recall: float

    def as_row(self) -> list:
        return [self.axis, self.value, f"{self.p_good:.6f}", f"{self.recall:.6f}"]


@dataclass
class ConvergenceResult:
    """收敛对比结果"""

    curves: Dict[str, List[Tuple[int, float]]] = field(default_factory=dict)
    steps_to_target: Dict[str, Optional[int]] = field(default_factory=dict)
    best_margin: Optional[float] = None
    target: float = 0.5


def _training_for(config: TrainConfig, steps: int, **loss_changes) -> TrainConfig:
    loss = replace(config.loss, **loss_changes)
    shared = max(config.shared_negatives, loss.hard_neg_count)
    return replace(config, loss=loss, shared_negatives=shared, max_steps=steps, epochs=max(config.epochs, 1))


def train_and_evaluate(corpus: Corpus, config: PipelineConfig, rule: KeyTermRule, model_config: ModelConfig,
                       train_config: TrainConfig, checkpoint: Optional[str] = None,
                       train_missing: bool = True) -> Tuple[EvalReport, Optional[TrainResult]]:
    """
    训练（或加载已有检查点）后做精确检索评估

    Raises:
        DataError: 检查点不存在且不允许训练
    """
    model = TwoTowerModel.from_corpus(corpus, model_config, seed=config.seed)
    result = None
    if checkpoint and Path(checkpoint).exists():
        model.load(checkpoint)
    elif not train_missing:
        raise DataError(f"检查点不存在: {checkpoint}", code="MISSING_CHECKPOINT",
                        suggestion="去掉 --no-train 让扫描自动训练")
    else:
        result = Trainer(model, corpus, train_config, checkpoint_path=checkpoint).train()
    report = Evaluator(model, corpus, config.evaluation, rule).run()
    return report, result


def run_sweep(axis: str, values: Sequence[float], corpus: Corpus, config: PipelineConfig, rule: KeyTermRule,
              output_csv: Optional[str] = None, checkpoint_dir: Optional[str] = None,
              train_missing: bool = True) -> List[SweepRow]:
    """
    Args:
        axis: "tau" 或 "N_hard"
        values: 扫描取值
        checkpoint_dir: 检查点目录，命名为 <axis>_<value>.mgd
        train_missing: 检查点缺失时是否训练

    Raises:
        InvalidParameterError: 未知的扫描轴或空取值列表
    """
    if axis not in SWEEP_AXES:
        raise InvalidParameterError(f"扫描轴只支持 {SWEEP_AXES}，当前 {axis}")
    if not values:
        raise InvalidParameterError("扫描取值列表为空")
    steps = config.evaluation.sweep_steps
    rows: List[SweepRow] = []
    for value in values:
        if axis == "tau":
            train_cfg = _training_for(config.training, steps, temperature=float(value))
        else:
            train_cfg = _training_for(config.training, steps, hard_neg_count=int(value))
        train_cfg.validate()
        checkpoint = str(Path(checkpoint_dir) / f"{axis}_{value}.mgd") if checkpoint_dir else None
        report, _ = train_and_evaluate(corpus, config, rule, config.model, train_cfg, checkpoint, train_missing)
        rows.append(SweepRow(axis, value, report.p_good, report.recall_at_k))
        logger.info(f"[扫描] {axis}={value}: P_good={report.p_good:.4f} recall={report.recall_at_k:.4f}")
    if output_csv:
        write_csv(output_csv, SWEEP_HEADER, [r.as_row() for r in rows])
    return rows


def ablation_configs(config: PipelineConfig, steps: int) -> Dict[str, Tuple[ModelConfig, TrainConfig]]:
    """
    各消融变体的 (模型配置, 训练配置)

    base 关闭多粒度语义单元、使用均值融合、τ=1、N=0，其余变体逐项打开。
    """
    tau = config.training.loss.temperature
    n_hard = config.training.loss.hard_neg_count

    def variant(mgs: bool, trm: bool, use_tau: bool, imix: bool) -> Tuple[ModelConfig, TrainConfig]:
        model_cfg = replace(config.model, use_mgs=mgs, fusion="transformer" if trm else "mean")
        train_cfg = _training_for(
            config.training, steps,
            loss_kind="softmax",
            temperature=tau if use_tau else 1.0,
            hard_neg_count=n_hard if imix else 0,
        )
        return model_cfg, train_cfg

    return {
        "base": variant(False, False, False, False),
        "+mgs": variant(True, False, False, False),
        "+trm": variant(False, True, False, False),
        "+tau": variant(False, False, True, False),
        "+mgs+trm+tau": variant(True, True, True, False),
        "+imix": variant(False, False, False, True),
        "all": variant(True, True, True, True),
    }


def run_ablation(corpus: Corpus, config: PipelineConfig, rule: KeyTermRule,
                 variants: Optional[Sequence[str]] = None, output_csv: Optional[str] = None) -> List[list]:
    """返回 [(variant, recall, p_good)]"""
    configs = ablation_configs(config, config.evaluation.sweep_steps)
    chosen = list(variants) if variants else list(ABLATION_VARIANTS)
    unknown = [v for v in chosen if v not in configs]
    if unknown:
        raise InvalidParameterError(f"未知的消融变体: {unknown}", suggestion=f"可选: {list(ABLATION_VARIANTS)}")
    rows = []
    for name in chosen:
        model_cfg, train_cfg = configs[name]
        report, _ = train_and_evaluate(corpus, config, rule, model_cfg, train_cfg)
        rows.append([name, report.recall_at_k, report.p_good])
        logger.info(f"[消融] {name}: recall={report.recall_at_k:.4f} P_good={report.p_good:.4f}")
    if output_csv:
        write_csv(output_csv, ABLATION_HEADER, [[n, f"{r:.6f}", f"{p:.6f}"] for n, r, p in rows])
    return rows


def run_convergence(corpus: Corpus, config: PipelineConfig, target: float = 0.5,
                    margins: Optional[Sequence[float]] = None, output_csv: Optional[str] = None) -> ConvergenceResult:
    """
    softmax 与各 hinge margin 在相同种子下训练，记录验证 Recall@K 曲线

    hinge 的最佳 margin 取最终验证召回率最高者（相同时取较小 margin）。
    """
    steps = config.evaluation.sweep_steps
    margins = list(margins) if margins else list(config.training.hinge_margins)
    runs: Dict[str, TrainConfig] = {"softmax": _training_for(config.training, steps, loss_kind="softmax")}
    for m in margins:
        runs[f"hinge@{m}"] = _training_for(config.training, steps, loss_kind="hinge", margin=float(m))

    result = ConvergenceResult(target=target)
    final: Dict[str, float] = {}
    for label, train_cfg in runs.items():
        model = TwoTowerModel.from_corpus(corpus, config.model, seed=config.seed)
        run = Trainer(model, corpus, train_cfg).train()
        result.curves[label] = [(int(p["step"]), float(p["recall_at_k"])) for p in run.recall_curve]
        result.steps_to_target[label] = run.steps_to_recall(target)
        final[label] = result.curves[label][-1][1] if result.curves[label] else 0.0
        logger.info(f"[收敛] {label}: 达到 recall {target} 的步数 = {result.steps_to_target[label]}")

    if margins:
        best = max(margins, key=lambda m: (final[f"hinge@{m}"], -m))
        result.best_margin = float(best)

    if output_csv:
        rows = [[label, step, f"{value:.6f}"] for label, points in result.curves.items() for step, value in points]
        write_csv(output_csv, ["run", "step", "recall_at_k"], rows)
    return result
