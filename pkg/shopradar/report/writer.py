# coding=utf-8
"""
报告文件写入

- JSON：键排序、固定缩进，相同报告写出的字节完全一致
- CSV：首行为表头
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["user_id", "query_id", "targets", "recall", "p_good", "p_f_good",
                  "num_prank", "num_rank", "kept", "dropped", "required"]


def write_json(path: str, data: Dict[str, Any]) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return str(path)


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: str, header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))
    return str(path)


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_eval_report(report, report_dir: str, name: str = "eval") -> Dict[str, str]:
    """
    写出评估报告

    Returns:
        {"json": 路径, "csv": 逐 query 记录路径}
    """
    base = Path(report_dir)
    json_path = write_json(str(base / f"{name}.json"), report.to_dict())
    rows = []
    for r in report.records:
        rows.append([
            r.user_id, r.query_id, r.targets, f"{r.recall:.6f}", f"{r.p_good:.6f}",
            "" if r.p_f_good is None else f"{r.p_f_good:.6f}",
            r.num_prank, r.num_rank, r.kept, r.dropped, " ".join(r.required),
        ])
    csv_path = write_csv(str(base / f"{name}_queries.csv"), RECORD_COLUMNS, rows)
    logger.info(f"[报告] 评估报告已保存: {json_path}")
    return {"json": json_path, "csv": csv_path}
