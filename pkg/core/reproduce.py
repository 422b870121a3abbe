# core/reproduce.py
# -*- coding: utf-8 -*-
"""
复现两张仿真图（fig1 / fig2），并和 data/figures/ 里的数字化坐标逐点对比。

- desk：ρ 每 0.1 一个点，仿真总时长有上限；full：ρ 每 0.01 一个点；
- 仿真曲线只跑到图上最后一个有限点，再往后多跑一个网格点用来确认"不稳定"；
- 仿真行按相对误差比（desk 15%，full 10%）；下界 / 参考曲线按 1e-6 相对误差，
  但不会比图中数字本身的打印精度更严（有的坐标只给了 4 位有效数字）；
- 另外逐点核对：收敛的仿真值 ≥ 同一 ρ 下所有非空泛的总队长下界。
"""

from __future__ import annotations

import csv
import logging
import math
import os
from collections import defaultdict
from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Any, Dict, List, Optional, Sequence, Tuple

from core import settings
from core.config_loader import ExperimentConfig, load_config
from core.errors import DomainError
from core.orchestrator import ExperimentOrchestrator, PointResult
from core.results import ResultRow, write_csv

logger = logging.getLogger(__name__)

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIGURE_DIR = os.path.join(BASE_DIR, "data", "figures")
SCENARIO_DIR = os.path.join(BASE_DIR, "config", "scenarios")

# 图名 → (场景配置, 坐标文件)
FIGURES = {
    "fig1": ("fig1.yaml", "fig1_v1.csv"),
    "fig2": ("fig2.yaml", "fig2_v1.csv"),
}

COMPARISON_COLUMNS = ["series", "kind", "rho", "expected", "observed", "tolerance", "rel_error", "status"]


@dataclass(frozen=True)
class FigurePoint:
    """text 保留 CSV 里的原始写法，用来推断打印精度。"""

    series: str
    kind: str
    rho: float
    value: float
    text: str

    @property
    def unstable(self) -> bool:
        return math.isinf(self.value)


def load_figure(name: str) -> List[FigurePoint]:
    if name not in FIGURES:
        raise DomainError(f"未知的图 {name}", choices=sorted(FIGURES))
    path = os.path.join(FIGURE_DIR, FIGURES[name][1])
    out = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            out.append(FigurePoint(
                series=row["series"],
                kind=row["kind"],
                rho=round(float(row["rho"]), 6),
                value=float(row["value"]),
                text=row["value"].strip(),
            ))
    return out


def printed_resolution(text: str) -> float:
    """半个末位单位：'0.001302' → 5e-7。"""
    exponent = Decimal(text).as_tuple().exponent
    return 0.5 * 10.0 ** exponent if isinstance(exponent, int) else 0.0


def rho_grid(step: float) -> Tuple[float, ...]:
    count = int(math.floor(1.0 / step + 1e-9))
    return tuple(v for v in (round(k * step, 6) for k in range(1, count + 1)) if v < 1.0)


def simulation_grid(points: Sequence[FigurePoint], series: str, grid: Sequence[float]) -> Tuple[float, ...]:
    """该曲线在网格上要跑的 ρ：最后一个有限点之前的全部，加上之后的第一个网格点（图上已经发散时）。"""
    own = [p for p in points if p.series == series and p.kind == "simulation"]
    if not own:
        return tuple(grid)
    finite = [p.rho for p in own if not p.unstable]
    last = max(finite) if finite else 0.0
    diverges = any(p.unstable for p in own)
    chosen = [r for r in grid if r <= last + 1e-9]
    beyond = [r for r in grid if r > last + 1e-9]
    if diverges and beyond:
        chosen.append(beyond[0])
    return tuple(chosen)


@dataclass(frozen=True)
class ComparisonRow:
    series: str
    kind: str
    rho: float
    expected: float
    observed: float
    tolerance: float
    rel_error: float
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_row(self) -> Dict[str, Any]:
        return {c: getattr(self, c) for c in COMPARISON_COLUMNS}


def _rel(observed: float, expected: float) -> float:
    if not math.isfinite(observed) or not math.isfinite(expected):
        return math.inf
    return abs(observed - expected) / abs(expected) if expected != 0 else abs(observed)


def _simulated(rows: Sequence[ResultRow]) -> Dict[Tuple[str, float], Tuple[float, bool]]:
    """(策略, ρ) → (各 seed 的平均值, 是否全部收敛)。"""
    values: Dict[Tuple[str, float], List[float]] = defaultdict(list)
    converged: Dict[Tuple[str, float], bool] = defaultdict(lambda: True)
    for r in rows:
        if r.quantity != "sim_mean_total_queue":
            continue
        key = (r.series, round(r.rho, 6))
        values[key].append(r.value)
        converged[key] = converged[key] and r.provenance.endswith(";converged")
    return {k: (sum(v) / len(v), converged[k]) for k, v in values.items()}


def _analytic(rows: Sequence[ResultRow]) -> Dict[Tuple[str, float], float]:
    out = {}
    for r in rows:
        if r.quantity.startswith("bound_") or r.quantity == "reference_curve":
            out[(r.series, round(r.rho, 6))] = r.value
    return out


def compare(
    points: Sequence[FigurePoint],
    rows: Sequence[ResultRow],
    tolerance_sim: float,
    bound_rel: float,
) -> List[ComparisonRow]:
    """只比较本次实际算了的点；没跑到的 ρ 不出现在报告里。"""
    sims = _simulated(rows)
    analytic = _analytic(rows)
    out = []
    for p in points:
        key = (p.series, p.rho)
        if p.kind == "simulation":
            if key not in sims:
                continue
            observed, converged = sims[key]
            if p.unstable:
                status = "ok" if not converged else "missed_instability"
                out.append(ComparisonRow(p.series, p.kind, p.rho, p.value, observed, tolerance_sim, math.inf, status))
                continue
            rel = _rel(observed, p.value)
            if not converged:
                status = "not_converged"
            else:
                status = "ok" if rel <= tolerance_sim else "deviation"
            out.append(ComparisonRow(p.series, p.kind, p.rho, p.value, observed, tolerance_sim, rel, status))
        else:
            if key not in analytic:
                continue
            observed = analytic[key]
            tol = max(bound_rel * abs(p.value), printed_resolution(p.text))
            status = "ok" if abs(observed - p.value) <= tol else "deviation"
            out.append(ComparisonRow(p.series, p.kind, p.rho, p.value, observed, tol, _rel(observed, p.value), status))
    return out


def ordering_checks(rows: Sequence[ResultRow]) -> List[ComparisonRow]:
    """收敛的仿真总队长不应低于同一 ρ 下的非空泛总队长下界。"""
    bounds: Dict[float, List[ResultRow]] = defaultdict(list)
    for r in rows:
        if r.quantity == "bound_aggregate_queue" and not r.vacuous:
            bounds[round(r.rho, 6)].append(r)
    out = []
    for (series, rho), (observed, converged) in sorted(_simulated(rows).items()):
        if not converged:
            continue
        for b in bounds.get(rho, []):
            status = "ok" if observed >= b.value else "below_bound"
            out.append(ComparisonRow(
                f"{series}>={b.series}", "ordering", rho, b.value, observed, 0.0, _rel(observed, b.value), status,
            ))
    return out


@dataclass(frozen=True)
class ReproductionReport:
    figure: str
    scale: str
    comparisons: Tuple[ComparisonRow, ...]
    files: Dict[str, str]

    @property
    def failures(self) -> List[ComparisonRow]:
        return [c for c in self.comparisons if not c.ok]

    @property
    def passed(self) -> bool:
        return not self.failures


def _figure_config(figure: str) -> ExperimentConfig:
    return load_config(os.path.join(SCENARIO_DIR, FIGURES[figure][0]))


def reproduce(
    figure: str,
    scale: str = "desk",
    out_dir: Optional[str] = None,
    threads: int = 1,
    seed: Optional[int] = None,
) -> ReproductionReport:
    points = load_figure(figure)
    try:
        sc = settings.scale(scale)
    except KeyError:
        raise DomainError(f"未知的规模 {scale}", choices=["desk", "full"])
    base = replace(_figure_config(figure), scenario=f"{figure}_{scale}")
    out_dir = out_dir or base.output_dir
    grid = rho_grid(float(sc["rho_step"]))
    logger.info("[Reproduce] %s（%s）：ρ 步长 %s，仿真容差 %.0f%%", figure, scale, sc["rho_step"],
                100 * float(sc["tolerance_sim"]))

    results: List[PointResult] = []
    if base.bounds:
        bound_cfg = replace(base, rhos=grid, simulation={**base.simulation, "enabled": False})
        results += ExperimentOrchestrator(bound_cfg, out_dir, threads).collect(("bounds",))
    for strategy in base.strategies:
        rhos = simulation_grid(points, strategy.describe(), grid)
        if not rhos:
            continue
        logger.info("[Reproduce] 策略 %s：%d 个负载点", strategy.describe(), len(rhos))
        sim_cfg = replace(base, rhos=rhos, strategies=(strategy,), bounds=())
        results += ExperimentOrchestrator(sim_cfg, out_dir, threads, seed, scale).collect(("simulation",))

    output = ExperimentOrchestrator(base, out_dir).write(results)
    comparisons = compare(points, output.rows, float(sc["tolerance_sim"]), float(settings.get("comparison", "bound_rel")))
    comparisons += ordering_checks(output.rows)
    files = dict(output.files)
    files["comparison"] = write_csv(
        os.path.join(out_dir, f"{base.scenario}_comparison.csv"), COMPARISON_COLUMNS,
        (c.as_row() for c in comparisons),
    )
    report = ReproductionReport(figure, scale, tuple(comparisons), files)
    for c in report.failures:
        logger.warning("[Reproduce] %s ρ=%.2f：期望 %.6g，得到 %.6g（%s）", c.series, c.rho, c.expected, c.observed, c.status)
    logger.info("[Reproduce] %s（%s）对比 %d 项，不通过 %d 项", figure, scale, len(comparisons), len(report.failures))
    return report
