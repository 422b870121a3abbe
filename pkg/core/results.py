# core/results.py
# -*- coding: utf-8 -*-
"""
结果行和 CSV 输出。

每个 (scenario, rho, quantity, series) 一行，列顺序固定；
同一配置、同一组 seed 重跑，输出逐字节相同（浮点统一用 repr 精度写出）。
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["scenario", "rho", "quantity", "series", "value", "provenance", "vacuous"]
SIMULATION_COLUMNS = [
    "scenario", "rho", "strategy", "seed", "horizon", "mean_total_queue", "converged",
    "unstable", "window_1", "window_2", "doublings",
]


@dataclass(frozen=True)
class ResultRow:
    """
    quantity 例：theta、log_z、t_mix、bound_total、bound_per_node、sim_mean_total_queue、fc_gap ...
    series 区分同一 quantity 下的不同曲线（策略名、下界名、节点号）。
    """

    scenario: str
    rho: float
    quantity: str
    series: str
    value: float
    provenance: str = ""
    vacuous: bool = False

    def sort_key(self):
        return (self.scenario, self.rho, self.quantity, self.series, self.provenance)

    def as_row(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "rho": _fmt(self.rho),
            "quantity": self.quantity,
            "series": self.series,
            "value": _fmt(self.value),
            "provenance": self.provenance,
            "vacuous": str(bool(self.vacuous)).lower(),
        }


def _fmt(x: Any) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})
    logger.info("[Results] 写出 %s", path)
    return path


def write_results(path: str, rows: Sequence[ResultRow]) -> str:
    ordered = sorted(rows, key=ResultRow.sort_key)
    return write_csv(path, RESULT_COLUMNS, (r.as_row() for r in ordered))


def read_results(path: str) -> List[ResultRow]:
    """读回 write_results 写出的文件（reproduce 对比、测试用）。"""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            out.append(ResultRow(
                scenario=row["scenario"],
                rho=float(row["rho"]),
                quantity=row["quantity"],
                series=row["series"],
                value=float(row["value"]),
                provenance=row["provenance"],
                vacuous=row["vacuous"] == "true",
            ))
    return out
