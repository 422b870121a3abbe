# tests/test_reproduce.py
# -*- coding: utf-8 -*-

import math
import os

import pytest

from core.errors import DomainError
from core.reproduce import (
    FigurePoint, compare, load_figure, ordering_checks, printed_resolution, reproduce, rho_grid, simulation_grid,
)
from core.results import ResultRow


def _point(series, kind, rho, text):
    return FigurePoint(series, kind, rho, float(text), text)


def _sim(series, rho, value, status="converged", seed=1):
    return ResultRow("fig", rho, "sim_mean_total_queue", series, value, provenance=f"seed={seed};{status}")


# ---------- 坐标文件 ----------

def test_load_figures():
    fig1 = load_figure("fig1")
    assert {p.series for p in fig1} == {"nu=5", "nu=1", "nu=0.2", "thm2_total"}
    unstable = [p for p in fig1 if p.unstable]
    assert {(p.series, p.rho) for p in unstable} >= {("nu=1", 0.51), ("nu=0.2", 0.21)}
    fig2 = load_figure("fig2")
    assert sum(1 for p in fig2 if p.series == "thm2_per_node") == 106
    with pytest.raises(DomainError):
        load_figure("fig9")


def test_printed_resolution():
    assert printed_resolution("0.001302") == pytest.approx(5e-7)
    assert printed_resolution("1.302083e-004") == pytest.approx(5e-11)
    assert printed_resolution("2061.982571") == pytest.approx(5e-7)
    assert printed_resolution("inf") == 0.0


def test_rho_grid():
    assert rho_grid(0.1) == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    fine = rho_grid(0.01)
    assert len(fine) == 99 and fine[-1] == 0.99


def test_simulation_grid_stops_after_divergence():
    points = [
        _point("a", "simulation", 0.1, "1.0"),
        _point("a", "simulation", 0.25, "3.0"),
        _point("a", "simulation", 0.26, "inf"),
        _point("b", "simulation", 0.3, "2.0"),
    ]
    grid = rho_grid(0.1)
    assert simulation_grid(points, "a", grid) == (0.1, 0.2, 0.3)
    # 没有发散点的曲线不多跑
    assert simulation_grid(points, "b", grid) == (0.1, 0.2, 0.3)
    assert simulation_grid(points, "c", grid) == grid


# ---------- 对比 ----------

def test_compare_statuses():
    points = [
        _point("nu=1", "simulation", 0.4, "95.845411"),
        _point("nu=1", "simulation", 0.5, "1592.211283"),
        _point("nu=1", "simulation", 0.6, "inf"),
        _point("nu=5", "simulation", 0.8, "inf"),
        _point("nu=5", "simulation", 0.7, "500.0"),
        _point("thm2_total", "bound", 0.5, "0.001302"),
        _point("thm2_total", "bound", 0.9, "67.939901"),
        _point("thm2_total", "bound", 0.3, "0.000001"),
    ]
    rows = [
        _sim("nu=1", 0.4, 90.0, seed=1),
        _sim("nu=1", 0.4, 100.0, seed=2),
        _sim("nu=1", 0.5, 3000.0),
        _sim("nu=1", 0.6, 1e4, status="unstable"),
        _sim("nu=5", 0.8, 800.0),
        _sim("nu=5", 0.7, 510.0, status="not_converged"),
        ResultRow("fig", 0.5, "bound_aggregate_queue", "thm2_total", 0.0013020833),
        ResultRow("fig", 0.9, "bound_aggregate_queue", "thm2_total", 67.95),
    ]
    by_key = {(c.series, c.rho): c for c in compare(points, rows, 0.15, 1e-6)}
    assert by_key[("nu=1", 0.4)].status == "ok"
    assert by_key[("nu=1", 0.4)].observed == pytest.approx(95.0)
    assert by_key[("nu=1", 0.5)].status == "deviation"
    assert by_key[("nu=1", 0.6)].status == "ok"
    assert by_key[("nu=5", 0.8)].status == "missed_instability"
    assert by_key[("nu=5", 0.7)].status == "not_converged"
    assert by_key[("thm2_total", 0.5)].status == "ok"
    assert by_key[("thm2_total", 0.9)].status == "deviation"
    # 没算到的点不进报告
    assert ("thm2_total", 0.3) not in by_key


def test_ordering_checks():
    rows = [
        _sim("s", 0.5, 3.0),
        _sim("t", 0.5, 10.0, status="not_converged"),
        ResultRow("fig", 0.5, "bound_aggregate_queue", "cover", 5.0),
        ResultRow("fig", 0.5, "bound_aggregate_queue", "empty", 0.0, vacuous=True),
        ResultRow("fig", 0.5, "bound_per_node_queue", "per_node", 100.0),
    ]
    checks = ordering_checks(rows)
    assert len(checks) == 1
    assert checks[0].series == "s>=cover" and checks[0].status == "below_bound"
    assert checks[0].kind == "ordering"


def test_unknown_scale(tmp_path):
    with pytest.raises(DomainError):
        reproduce("fig1", scale="huge", out_dir=str(tmp_path))


# ---------- 桌面规模整图复现 ----------

@pytest.mark.slow
@pytest.mark.parametrize("figure", ["fig1", "fig2"])
def test_desk_reproduction(tmp_path, figure):
    report = reproduce(figure, "desk", out_dir=str(tmp_path), threads=4)
    assert os.path.exists(report.files["comparison"])
    analytic = [c for c in report.comparisons if c.kind in ("bound", "reference")]
    assert analytic and all(c.ok for c in analytic)
    assert not [c for c in report.comparisons if c.status == "below_bound"]
    sims = [c for c in report.comparisons if c.kind == "simulation" and math.isfinite(c.expected)]
    assert sims
