# coding=utf-8
"""
ShopRadar 命令行入口

子命令：gen-data / train / export / build-index / search / eval / sweep / serve
退出码：0 成功，1 用法或配置错误，2 数据错误，3 数值错误
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from shopradar import __version__
from shopradar.context import AppContext
from shopradar.core.errors import NumericError, ShopRadarError, UsageError
from shopradar.core.loader import load_config

logger = logging.getLogger("shopradar")


class _Parser(argparse.ArgumentParser):
    """argparse 默认以退出码 2 结束，这里统一转成 UsageError（退出码 1）"""

    def error(self, message: str):
        raise UsageError(message, suggestion=f"运行 {self.prog} --help 查看用法")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shopradar", description="个性化商品语义检索：语料生成、训练、索引、评估与在线检索")
    parser.add_argument("--version", action="version", version=f"shopradar {__version__}")
    parser.add_argument("--config", default=None, help="配置文件路径（默认 config/config.yaml）")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="覆盖配置项，可重复")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = sub.add_parser("gen-data", help="生成合成语料")
    gen.add_argument("--out", default=None, help="输出目录（默认 paths.corpus_dir）")
    gen.add_argument("--check-lexical", action="store_true", help="生成后计算词面匹配器的 Recall@100")

    train = sub.add_parser("train", help="训练双塔模型")
    train.add_argument("--loss", choices=["softmax", "hinge"], default=None)
    train.add_argument("--temperature", type=float, default=None)
    train.add_argument("--hard-negatives", type=int, default=None)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--max-steps", type=int, default=None)

    sub.add_parser("export", help="导出全部商品嵌入")

    build = sub.add_parser("build-index", help="构建多列 ANN 索引")
    build.add_argument("--columns", type=int, default=None)
    build.add_argument("--branching", type=int, default=None)
    build.add_argument("--depth", type=int, default=None)
    build.add_argument("--scan-ratio", type=float, default=None)
    build.add_argument("--seed", type=int, default=None)

    search = sub.add_parser("search", help="批量检索：每行一个 {user_id, query, k} 请求")
    search.add_argument("--queries", required=True, help="请求文件（JSONL）")
    search.add_argument("--k", type=int, default=None)
    search.add_argument("--scan-ratio", type=float, default=None)
    search.add_argument("--output", default=None, help="结果文件（默认输出到标准输出）")

    ev = sub.add_parser("eval", help="离线评估")
    ev.add_argument("--exact", action="store_true", help="使用精确内积检索代替 ANN 索引")
    ev.add_argument("--name", default="eval", help="报告文件名前缀")

    sweep = sub.add_parser("sweep", help="参数扫描 / 消融 / 收敛对比")
    sweep.add_argument("--axis", choices=["tau", "N_hard", "ablation", "convergence"], required=True)
    sweep.add_argument("--values", default=None, help="逗号分隔的取值（默认取配置）")
    sweep.add_argument("--no-train", action="store_true", help="只使用已有检查点")
    sweep.add_argument("--target", type=float, default=0.5, help="收敛对比的目标召回率")

    serve = sub.add_parser("serve", help="启动 NDJSON 检索服务")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    return parser


def _collect_overrides(args: argparse.Namespace) -> List[str]:
    """把子命令上的快捷参数转换成配置覆盖项"""
    overrides = list(args.overrides)
    mapping = {
        "loss": "training.loss",
        "temperature": "training.temperature",
        "hard_negatives": "training.hard_negatives",
        "epochs": "training.epochs",
        "max_steps": "training.max_steps",
        "columns": "index.n_columns",
        "branching": "index.branching",
        "depth": "index.depth",
        "seed": "app.seed",
        "host": "serve.host",
        "port": "serve.port",
    }
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    if args.command == "build-index" and args.scan_ratio is not None:
        overrides.append(f"index.max_scan_ratio={args.scan_ratio}")
    return overrides


# =====================
# 子命令
# =====================

def cmd_gen_data(ctx: AppContext, args: argparse.Namespace) -> None:
    from shopradar.corpus.generator import generate
    from shopradar.corpus.oracle import lexical_recall

    out = args.out or ctx.pipeline.corpus_dir
    counts = generate(ctx.pipeline.generator, out)
    print(f"[语料] 已生成到 {out}: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    if args.check_lexical:
        ctx.pipeline.corpus_dir = out
        print(f"[语料] 词面匹配器 Recall@100 = {lexical_recall(ctx.corpus(), 100):.4f}")


def cmd_train(ctx: AppContext, args: argparse.Namespace) -> None:
    from shopradar.training.trainer import Trainer

    model = ctx.new_model()
    print(f"[训练] 参数量 {model.params.num_values()}，开始训练（{ctx.now_display()}）")
    result = Trainer(model, ctx.corpus(), ctx.pipeline.training,
                     metrics_path=ctx.pipeline.metrics, checkpoint_path=ctx.pipeline.checkpoint).train()
    print(f"[训练] 完成 {result.steps} 步，最终 loss={result.final_loss:.4f}，"
          f"批内准确率={result.final_in_batch_accuracy:.3f}")
    print(f"[训练] 检查点: {ctx.pipeline.checkpoint}，指标: {ctx.pipeline.metrics}")


def cmd_export(ctx: AppContext, args: argparse.Namespace) -> None:
    matrix = ctx.model().export_all_items(ctx.pipeline.embeddings)
    print(f"[导出] {matrix.shape[0]}×{matrix.shape[1]} 嵌入已写入 {ctx.pipeline.embeddings}")


def cmd_build_index(ctx: AppContext, args: argparse.Namespace) -> None:
    from shopradar.index.searcher import build_index_from_file

    embeddings = ctx.require(ctx.pipeline.embeddings, "嵌入文件", "请先运行 shopradar export")
    index = build_index_from_file(embeddings, ctx.pipeline.index, ctx.pipeline.index_dir)
    print(f"[索引] {index.n_columns} 列、{index.n_items} 个商品，已写入 {ctx.pipeline.index_dir}")


def cmd_search(ctx: AppContext, args: argparse.Namespace) -> None:
    path = ctx.require(args.queries, "请求文件", "每行一个 JSON：{\"user_id\": 1, \"query\": \"...\"}")
    pipeline = ctx.serve_pipeline(args.k, args.scan_ratio)
    lines = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            if not raw.strip():
                continue
            try:
                request = json.loads(raw)
            except json.JSONDecodeError as e:
                from shopradar.core.errors import MalformedRecordError
                raise MalformedRecordError(path, line_no, str(e))
            lines.append(json.dumps(pipeline.handle(request), ensure_ascii=False))
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"[检索] {len(lines)} 条结果已写入 {args.output}")
    else:
        for line in lines:
            print(line)


def cmd_eval(ctx: AppContext, args: argparse.Namespace) -> None:
    from shopradar.evaluation.harness import Evaluator
    from shopradar.report.writer import write_eval_report

    index = None if args.exact else ctx.index()
    report = Evaluator(ctx.model(), ctx.corpus(), ctx.pipeline.evaluation, ctx.rule(), index, ctx.inverted()).run()
    paths = write_eval_report(report, ctx.pipeline.report_dir, args.name)
    print(json.dumps(report.summary(), ensure_ascii=False, indent=2))
    print(f"[评估] 报告: {paths['json']}")


def _parse_values(raw: Optional[str], default: list, cast) -> list:
    if not raw:
        return list(default)
    try:
        return [cast(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values 无法解析: {raw}")


def cmd_sweep(ctx: AppContext, args: argparse.Namespace) -> None:
    from shopradar.evaluation import sweep
    from shopradar.report.charts import plot_convergence, plot_sweep

    report_dir = Path(ctx.pipeline.report_dir)
    corpus = ctx.corpus()
    if args.axis == "ablation":
        variants = _parse_values(args.values, sweep.ABLATION_VARIANTS, str)
        rows = sweep.run_ablation(corpus, ctx.pipeline, ctx.rule(), variants, str(report_dir / "ablation.csv"))
        for name, recall, p_good in rows:
            print(f"{name:>14}  recall={recall:.4f}  P_good={p_good:.4f}")
        return
    if args.axis == "convergence":
        margins = _parse_values(args.values, ctx.pipeline.training.hinge_margins, float)
        result = sweep.run_convergence(corpus, ctx.pipeline, args.target, margins,
                                       str(report_dir / "convergence.csv"))
        plot_convergence(result.curves, str(report_dir / "convergence.png"), ctx.pipeline.training.eval_k)
        for label, steps in result.steps_to_target.items():
            print(f"{label:>14}  steps_to_{args.target}={steps}")
        print(f"[收敛] 最佳 hinge margin: {result.best_margin}")
        return

    if args.axis == "tau":
        values = _parse_values(args.values, ctx.pipeline.evaluation.tau_values, float)
    else:
        values = _parse_values(args.values, ctx.pipeline.evaluation.hard_negative_values, int)
    rows = sweep.run_sweep(args.axis, values, corpus, ctx.pipeline, ctx.rule(),
                           output_csv=str(report_dir / f"sweep_{args.axis}.csv"),
                           checkpoint_dir=str(report_dir / "sweep_checkpoints"),
                           train_missing=not args.no_train)
    plot_sweep(args.axis, [r.value for r in rows], [r.p_good for r in rows], [r.recall for r in rows],
               str(report_dir / f"sweep_{args.axis}.png"))
    for row in rows:
        print(f"{args.axis}={row.value}  P_good={row.p_good:.4f}  recall={row.recall:.4f}")


def cmd_serve(ctx: AppContext, args: argparse.Namespace) -> None:
    from shopradar.service.server import run_server

    pipeline = ctx.serve_pipeline()
    print(f"[服务] 默认 K={pipeline.default_k}，扫描比例={pipeline.scan_ratio}")
    run_server(pipeline, ctx.pipeline.serve_host, ctx.pipeline.serve_port)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "export": cmd_export,
    "build-index": cmd_build_index,
    "search": cmd_search,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def run(argv: Optional[List[str]] = None) -> int:
    """执行命令并返回退出码（测试直接调用）"""
    debug = False
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("缺少子命令", suggestion="可用子命令: " + ", ".join(COMMANDS))
        config = load_config(args.config, _collect_overrides(args))
        debug = bool(config["APP"].get("DEBUG", False))
        logging.basicConfig(
            level=logging.DEBUG if debug else logging.INFO,
            format="%(asctime)s - %(levelname)s - %(message)s",
        )
        COMMANDS[args.command](AppContext(config), args)
        return 0
    except ShopRadarError as e:
        print(f"❌ [{e.code}] {e.message}", file=sys.stderr)
        if e.suggestion:
            print(f"   {e.suggestion}", file=sys.stderr)
        if debug:
            raise
        return e.exit_code
    except FloatingPointError as e:
        print(f"❌ [NUMERIC_ERROR] {e}", file=sys.stderr)
        return NumericError.exit_code


def main():
    """主程序入口"""
    sys.exit(run())


if __name__ == "__main__":
    main()
