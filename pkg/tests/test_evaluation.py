# coding=utf-8
"""
离线指标、评估流程、报告写入与参数扫描
"""

import numpy as np
import pytest

from shopradar.core.config import EvalConfig, FunnelConfig, IndexConfig, RelevanceConfig
from shopradar.core.errors import DataError, InvalidParameterError
from shopradar.evaluation import (
    Evaluator,
    QueryRecord,
    aggregate,
    build_eval_groups,
    funnel_counts,
    good_rate,
    recall_at_k,
)
from shopradar.evaluation.sweep import (
    ABLATION_VARIANTS,
    SWEEP_HEADER,
    ablation_configs,
    run_ablation,
    run_convergence,
    run_sweep,
)
from shopradar.index import build_index
from shopradar.relevance import KeyTermRule
from shopradar.report import RECORD_COLUMNS, plot_convergence, plot_sweep, read_csv, read_json, write_eval_report


@pytest.fixture
def key_rule(corpus):
    return KeyTermRule.from_config(RelevanceConfig(), corpus.lexicons)


def eval_config(**changes) -> EvalConfig:
    values = {"recall_k": 20, "good_k": 20, "scan_ratio": 1.0, "max_queries": 10}
    values.update(changes)
    return EvalConfig(**values)


def record(recall, p_good, p_f_good, num_prank=10, num_rank=3):
    return QueryRecord(user_id=0, query_id=0, targets=1, recall=recall, p_good=p_good, p_f_good=p_f_good,
                       num_prank=num_prank, num_rank=num_rank)


class TestMetrics:

    def test_recall_at_k(self):
        assert recall_at_k([1, 2, 9], {1, 2, 3, 4}) == 0.5
        assert recall_at_k([], {1}) == 0.0

    def test_recall_with_empty_targets(self):
        with pytest.raises(InvalidParameterError):
            recall_at_k([1, 2], set())

    def test_good_rate(self):
        labels = {i: i < 7 for i in range(10)}
        assert good_rate(list(range(10)), labels) == pytest.approx(0.7)
        assert good_rate([], labels) == 0.0

    def test_good_rate_missing_label(self):
        with pytest.raises(DataError) as exc:
            good_rate([1, 42], {1: True})
        assert exc.value.code == "MISSING_LABEL"

    def test_funnel_counts(self):
        assert funnel_counts(list(range(800)), FunnelConfig(1.0, 0.34)) == (800, 272)
        assert funnel_counts(list(range(10)), FunnelConfig(0.5, 0.34)) == (5, 2)
        assert funnel_counts([], FunnelConfig()) == (0, 0)

    def test_metrics_match_set_arithmetic(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            retrieved = rng.permutation(50)[: int(rng.integers(0, 30))].tolist()
            targets = set(rng.choice(50, size=int(rng.integers(1, 10)), replace=False).tolist())
            labels = {i: bool(rng.integers(0, 2)) for i in range(50)}
            assert recall_at_k(retrieved, targets) == len(set(retrieved) & targets) / len(targets)
            expected = sum(labels[i] for i in retrieved) / len(retrieved) if retrieved else 0.0
            assert good_rate(retrieved, labels) == expected
            num_prank, num_rank = funnel_counts(retrieved, FunnelConfig(float(rng.uniform(0.1, 1.0)), 0.34), rng)
            assert num_rank <= num_prank <= len(retrieved)

    def test_eval_groups(self, corpus):
        groups = build_eval_groups(corpus)
        keys = [(g.user_id, g.query_id) for g in groups]
        assert len(keys) == len(set(keys))
        assert all(g.targets for g in groups)
        clicked = {(c.user_id, c.query_id, c.clicked_item_id) for c in corpus.test_clicks}
        for g in groups:
            assert any((g.user_id, g.query_id, t) in clicked for t in g.targets)
        assert build_eval_groups(corpus, 3) == groups[:3]


class TestAggregate:

    def test_means_and_filtered_empty(self):
        report = aggregate([record(1.0, 0.5, 0.8), record(0.0, 0.1, None, 20, 7)], skipped=2)
        assert report.queries == 2
        assert report.skipped == 2
        assert report.recall_at_k == pytest.approx(0.5)
        assert report.p_good == pytest.approx(0.3)
        assert report.p_f_good == pytest.approx(0.8)
        assert report.filtered_empty == 1
        assert report.num_prank == pytest.approx(15.0)
        assert report.num_rank == pytest.approx(5.0)

    def test_no_records(self):
        report = aggregate([], skipped=0)
        assert report.summary()["queries"] == 0
        assert report.recall_at_k == 0.0


class TestEvaluator:

    def test_exact_evaluation_is_repeatable(self, model, corpus, key_rule):
        first = Evaluator(model, corpus, eval_config(), key_rule).run()
        second = Evaluator(model, corpus, eval_config(), key_rule).run()
        assert first.to_dict() == second.to_dict()
        assert first.retriever == "exact"
        assert first.queries == 10
        for r in first.records:
            assert 0.0 <= r.recall <= 1.0
            assert 0.0 <= r.p_good <= 1.0
            assert r.kept + r.dropped == 20
            assert r.num_prank == r.kept

    def test_full_retrieval_recalls_everything(self, model, corpus, key_rule):
        config = eval_config(recall_k=corpus.n_items, good_k=corpus.n_items)
        report = Evaluator(model, corpus, config, key_rule).run()
        assert report.recall_at_k == pytest.approx(1.0)

    def test_ann_evaluation_is_repeatable(self, model, corpus, key_rule):
        index = build_index(model.export_item_matrix(), IndexConfig(
            n_columns=2, branching=4, depth=1, leaf_cap=16, max_scan_ratio=1.0, kmeans_iterations=5, seed=7,
        ))
        first = Evaluator(model, corpus, eval_config(scan_ratio=0.5), key_rule, index=index).run()
        second = Evaluator(model, corpus, eval_config(scan_ratio=0.5), key_rule, index=index).run()
        assert first.to_dict() == second.to_dict()
        assert first.retriever == "ann"
        assert first.config["index"]["n_columns"] == 2

    def test_report_files(self, model, corpus, key_rule, tmp_path):
        report = Evaluator(model, corpus, eval_config(max_queries=4), key_rule).run()
        paths = write_eval_report(report, str(tmp_path / "a"), name="tiny")
        assert paths["csv"].endswith("tiny_queries.csv")
        rows = read_csv(paths["csv"])
        assert len(rows) == 4
        assert list(rows[0]) == RECORD_COLUMNS
        assert read_json(paths["json"])["queries"] == 4
        again = write_eval_report(report, str(tmp_path / "b"), name="tiny")
        with open(paths["json"], "rb") as a, open(again["json"], "rb") as b:
            assert a.read() == b.read()


class TestSweep:

    def test_unknown_axis(self, corpus, pipeline_config, key_rule):
        with pytest.raises(InvalidParameterError):
            run_sweep("lr", [0.1], corpus, pipeline_config, key_rule)

    def test_empty_values(self, corpus, pipeline_config, key_rule):
        with pytest.raises(InvalidParameterError):
            run_sweep("tau", [], corpus, pipeline_config, key_rule)

    def test_ablation_variants(self, pipeline_config):
        configs = ablation_configs(pipeline_config, 5)
        assert tuple(configs) == ABLATION_VARIANTS
        base_model, base_train = configs["base"]
        assert not base_model.use_mgs
        assert base_model.fusion == "mean"
        assert base_train.loss.temperature == 1.0
        assert base_train.loss.hard_neg_count == 0
        all_model, all_train = configs["all"]
        assert all_model.use_mgs and all_model.fusion == "transformer"
        assert all_train.loss.temperature == pipeline_config.training.loss.temperature
        assert all_train.loss.hard_neg_count == pipeline_config.training.loss.hard_neg_count
        assert all_train.max_steps == 5

    def test_unknown_ablation_variant(self, corpus, pipeline_config, key_rule):
        with pytest.raises(InvalidParameterError):
            run_ablation(corpus, pipeline_config, key_rule, variants=["+nothing"])

    def test_sweep_reuses_checkpoints(self, corpus, pipeline_config, key_rule, tmp_path):
        out = tmp_path / "sweep_tau.csv"
        rows = run_sweep("tau", [0.5, 2.0], corpus, pipeline_config, key_rule,
                         output_csv=str(out), checkpoint_dir=str(tmp_path / "ckpt"))
        assert [r.value for r in rows] == [0.5, 2.0]
        assert (tmp_path / "ckpt" / "tau_0.5.mgd").exists()
        table = read_csv(str(out))
        assert list(table[0]) == SWEEP_HEADER
        assert len(table) == 2
        reused = run_sweep("tau", [0.5, 2.0], corpus, pipeline_config, key_rule,
                           checkpoint_dir=str(tmp_path / "ckpt"), train_missing=False)
        assert [(r.p_good, r.recall) for r in reused] == [(r.p_good, r.recall) for r in rows]

    def test_missing_checkpoint_without_training(self, corpus, pipeline_config, key_rule, tmp_path):
        with pytest.raises(DataError) as exc:
            run_sweep("N_hard", [0], corpus, pipeline_config, key_rule,
                      checkpoint_dir=str(tmp_path / "empty"), train_missing=False)
        assert exc.value.code == "MISSING_CHECKPOINT"

    def test_convergence_picks_smallest_margin_on_ties(self, corpus, pipeline_config, tmp_path):
        out = tmp_path / "conv.csv"
        result = run_convergence(corpus, pipeline_config, target=0.5, margins=[0.2, 0.1], output_csv=str(out))
        assert set(result.curves) == {"softmax", "hinge@0.2", "hinge@0.1"}
        assert all(points == [] for points in result.curves.values())
        assert result.steps_to_target == {"softmax": None, "hinge@0.2": None, "hinge@0.1": None}
        assert result.best_margin == 0.1
        assert out.read_text(encoding="utf-8").splitlines() == ["run,step,recall_at_k"]


class TestCharts:

    def test_plots_written(self, tmp_path):
        conv = plot_convergence({"softmax": [(1, 0.1), (2, 0.3)], "hinge@0.1": []}, str(tmp_path / "c.png"))
        sweep = plot_sweep("tau", [0.5, 2.0], [0.6, 0.7], [0.2, 0.3], str(tmp_path / "s" / "t.png"))
        for path in (conv, sweep):
            with open(path, "rb") as f:
                assert f.read(8) == b"\x89PNG\r\n\x1a\n"
