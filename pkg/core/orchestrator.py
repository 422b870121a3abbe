# core/orchestrator.py
# -*- coding: utf-8 -*-
"""
实验总控：ExperimentConfig → 各负载点上的平稳分析 / 下界 / 仿真 → CSV。

- 每个负载点是一个独立任务（纯函数 run_point），threads > 1 时丢进进程池；
- 结果按 (负载点, 输入顺序) 收集，由总控一处写出，保证输出顺序确定；
- 某个下界在某个负载点不适用（前提不满足、拓扑不对）只记 WARNING 并跳过该行，不中断整轮。
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import settings
from core.config_loader import ExperimentConfig, load_config
from core.errors import (
    AssumptionViolatedError, DomainError, InfeasibleLoadError, InsufficientDataError, InverseError, PreconditionError,
    UnavailableError, WrongTopologyError,
)
from core.results import SIMULATION_COLUMNS, ResultRow, write_csv, write_results
from bounds.diagnostics import lemma_diagnostics
from bounds.extension import thm4_bound, thm5_bound
from bounds.fixed_rate import (
    candidates_from_config, component_sets, example1_return_time_bound, prop1_bound, prop2_bound,
    singleton_complement_sets,
)
from bounds.partite_bounds import thm2_bound, thm2_symmetric_bound, thm3_bound
from bounds.paths import partite_sets
from bounds.queue_based import (
    activity_factor_requirement, clique_load_bound, thm1_concave_f, thm1_convex_g, thm1_h_bound,
    thm1_h_cover_total,
)
from bounds.rate_functions import RateFunctionFamily, probe_grid
from bounds.reports import REPORT_COLUMNS, BoundKind, BoundReport, Target, TrafficProfile, make_report
from simulator.checks import fuhrmann_cooper_from_estimate, little_check
from simulator.estimation import SimEstimate, estimate_mean_queue
from stationary.distribution import StationaryDistribution, fit_activity_factors, product_form
from stationary.mixing import mixing_time
from stationary.rates import FixedRates
from stationary.stability import stability_check
from topology.cliques import clique_cover, enumerate_cliques
from topology.graph import InterferenceGraph
from topology.partite import PartiteDecomposition, compute_zeta
from topology.state_space import StateSpace, enumerate_state_space

logger = logging.getLogger(__name__)

PARTS = ("stationary", "mixing", "bounds", "simulation")

# 不适用于当前负载点 / 拓扑的下界：跳过，不算错误
_SKIPPABLE = (
    PreconditionError, WrongTopologyError, InfeasibleLoadError, InverseError, AssumptionViolatedError,
)


@dataclass
class PointResult:
    rho: float
    rows: List[ResultRow] = field(default_factory=list)
    bound_rows: List[Dict[str, Any]] = field(default_factory=list)
    sim_rows: List[Dict[str, Any]] = field(default_factory=list)


@dataclass(frozen=True)
class RunOutput:
    rows: Tuple[ResultRow, ...]
    files: Dict[str, str]


# ================= 单个负载点 =================

class _Point:
    """一个负载点上的全部计算；状态空间、分布等按需惰性构造。"""

    def __init__(self, cfg: ExperimentConfig, rho: float, graph: InterferenceGraph,
                 d: Optional[PartiteDecomposition], protocol: Dict[str, Any]):
        self.cfg = cfg
        self.rho = rho
        self.graph = graph
        self.d = d
        self.protocol = protocol
        self.tp = traffic_profile(cfg, rho, graph, d)
        self.out = PointResult(rho=rho)
        self._ss: Optional[StateSpace] = None
        self._dist: Optional[StationaryDistribution] = None

    # --- 惰性对象 ---

    @property
    def ss(self) -> StateSpace:
        if self._ss is None:
            self._ss = enumerate_state_space(self.graph)
        return self._ss

    def rates(self) -> FixedRates:
        sigma = self.cfg.stationary.get("sigma")
        n = self.graph.n_nodes
        if isinstance(sigma, dict):
            margin = float(sigma["fit_margin"])
            return fit_activity_factors(self.ss, np.asarray(self.tp.rho) + margin)
        if sigma is not None:
            return FixedRates.from_sigma(sigma, n_nodes=n)
        for s in self.cfg.strategies:
            if s.kind == "fixed":
                return s.fixed_rates(n)
        raise DomainError("没有固定速率来源（stationary.sigma 或 fixed 策略）")

    @property
    def dist(self) -> StationaryDistribution:
        if self._dist is None:
            self._dist = product_form(self.ss, self.rates())
        return self._dist

    def emit(self, quantity: str, series: str, value: float, provenance: str = "", vacuous: bool = False):
        self.out.rows.append(ResultRow(
            scenario=self.cfg.scenario, rho=self.rho, quantity=quantity, series=series,
            value=float(value), provenance=provenance, vacuous=vacuous,
        ))

    def emit_report(self, series: str, report: BoundReport, quantity: Optional[str] = None, scale: float = 1.0):
        self.emit(quantity or f"bound_{report.target.value}", series, report.value * scale,
                  report.witness_descriptor(), report.vacuous)
        row = {"scenario": self.cfg.scenario, "sweep_rho": self.rho, "series": series}
        row.update(report.as_row())
        self.out.bound_rows.append(row)

    # --- 平稳分析 ---

    def run_stationary(self):
        dist = self.dist
        theta = dist.theta
        for i in range(self.graph.n_nodes):
            self.emit("theta", f"node{i}", theta[i])
            self.emit("sigma", f"node{i}", dist.rates.sigma[i])
        self.emit("log_z", "product_form", dist.log_z)
        verdict = stability_check(dist, self.tp.rho)
        self.emit("stability_margin", "min_theta_minus_rho", verdict.min_margin,
                  provenance="stable" if verdict.stable else "unstable")

    def run_mixing(self):
        eps = float(self.cfg.stationary.get("mixing_epsilon", self.cfg.bound_options.get("epsilon", 0.05)))
        profile = mixing_time(self.ss, self.rates(), eps)
        self.emit("t_mix", f"epsilon={eps:g}", profile.t_mix,
                  provenance=f"uniformization={profile.uniformization_rate:.6g}")

    # --- 下界 ---

    def _clique(self) -> List[int]:
        opt = self.cfg.bound_options.get("clique")
        if opt:
            return list(opt)
        return sorted(enumerate_cliques(self.graph)[-1])

    def _node_subset(self) -> List[int]:
        opt = self.cfg.bound_options.get("S")
        if opt:
            return list(opt)
        if self.d is not None:
            return list(self.d.components[0])
        return [0]

    def _family(self) -> RateFunctionFamily:
        spec = self.cfg.bound_options.get("family")
        if spec:
            return RateFunctionFamily.from_config(spec)
        for s in self.cfg.strategies:
            if s.kind == "queue_based":
                return s.rule(0)
        raise DomainError("Thm1 需要速率函数族（bounds.family 或一个 queue_based 策略）")

    def _candidates(self):
        user = candidates_from_config(self.ss, self.cfg.bound_options.get("candidates") or [])
        built_in = component_sets(self.ss, self.d) if self.d is not None else singleton_complement_sets(self.ss)
        return user + built_in

    def _fixed_nu(self) -> float:
        for s in self.cfg.strategies:
            if s.kind == "fixed":
                return float(s.rule(0).param_dict["nu"])
        raw = self.cfg.stationary.get("sigma")
        if isinstance(raw, dict):
            raise PreconditionError("拟合出的 σ 一般不相同，等速率返回时间下界不适用")
        sigma = np.atleast_1d(np.asarray(raw, dtype=float))
        if not np.all(sigma == sigma[0]):
            raise PreconditionError("等速率返回时间下界要求所有节点 ν 相同")
        return float(sigma[0])

    def run_bound(self, name: str):
        opts = self.cfg.bound_options
        weights = opts.get("weights", 1.0)
        eps = float(opts.get("epsilon", 0.05))
        tp = self.tp
        if name == "eq2":
            self.emit_report("eq2", clique_load_bound(tp, self._clique()))
        elif name == "lemma1":
            clique = self._clique()
            for i in clique:
                value = activity_factor_requirement(tp, clique, i)
                self.emit_report(f"lemma1[node{i}]", make_report(
                    BoundKind.LEMMA1, Target.ACTIVITY_FACTOR, value=value,
                    witness={"clique": clique, "node": i}, rho=tp.clique_load(clique)[1],
                ))
        elif name == "thm1_concave":
            family = self._family()
            xi = opts.get("xi", float(np.min(family.g(probe_grid()))))
            self.emit_report("thm1_concave", thm1_concave_f(tp, self._clique(), family, xi))
        elif name == "thm1_convex":
            if "xi" not in opts:
                raise DomainError("thm1_convex 需要显式的 bounds.xi（f 的上界）")
            self.emit_report("thm1_convex", thm1_convex_g(tp, self._clique(), self._family(), opts["xi"]))
        elif name == "thm1_h":
            self.emit_report("thm1_h", thm1_h_bound(tp, self._clique(), self._family()))
        elif name == "thm1_h_cover":
            self.emit_report("thm1_h_cover", thm1_h_cover_total(tp, clique_cover(self.graph), self._family()))
            # N ρ/(1-ρ)：图中的虚线按这条曲线画
            n = self.graph.n_nodes
            if self.rho < 1.0:
                self.emit("reference_curve", "n_rho_over_one_minus_rho", n * self.rho / (1.0 - self.rho))
        elif name == "prop1":
            self.emit_report("prop1", prop1_bound(self.ss, self.dist, tp, weights, self._node_subset(), self._candidates()))
        elif name == "prop2":
            self.emit_report("prop2", prop2_bound(self.dist, self._candidates(), eps))
        elif name == "thm2":
            self.emit_report("thm2", thm2_bound(self.d, tp, weights, self._node_subset(), self.graph))
        elif name == "thm2_symmetric":
            report = thm2_symmetric_bound(self.d, self.rho, self.graph)
            self.emit_report("thm2_per_node", report)
            self.emit_report("thm2_total", report, quantity="bound_aggregate_queue", scale=self.d.n_nodes)
        elif name == "thm3":
            self.emit_report("thm3", thm3_bound(self.d, tp, eps, self.graph))
        elif name in ("thm4", "thm5"):
            gamma = float(opts.get("gamma", 0.1))
            zeta = compute_zeta(self.ss, self.d).zeta
            S = self._node_subset()
            ps = partite_sets(self.ss, self.d, tp, weights, S, scan_min=(name == "thm5"))
            if name == "thm4":
                self.emit_report("thm4", thm4_bound(ps, self.d, tp, weights, S, gamma, zeta))
            else:
                self.emit_report("thm5", thm5_bound(ps, self.d, tp, gamma, eps, zeta))
        elif name == "example1":
            cands = self._candidates()
            self.emit_report("example1", example1_return_time_bound(self.ss, cands[0].members, self._fixed_nu()))
        elif name == "diagnostics":
            report = lemma_diagnostics(self.dist, self.d, tp, float(opts.get("gamma", 0.1)))
            self.emit("lemma_checks", "failed", len(report.failures()),
                      provenance=";".join(c.name for c in report.failures()))
            self.emit("lemma_checks", "total", len(report.checks),
                      provenance=";".join(f"{k}:{why}" for k, why in report.skipped))

    def run_bounds(self):
        for name in self.cfg.bounds:
            try:
                self.run_bound(name)
            except _SKIPPABLE as e:
                logger.warning("[Orchestrator] ρ=%.4g 下 %s 不适用，跳过: %s", self.rho, name, e)

    # --- 仿真 ---

    def run_simulation(self):
        sim = self.cfg.simulation
        fc = tuple(sim["fc_clique"]) if sim.get("fc_clique") else None
        cliques = [fc] if fc else []
        for strategy in self.cfg.strategies:
            means = []
            for seed in self.cfg.seeds:
                est = estimate_mean_queue(self.graph, self.tp, strategy, seed, cliques=cliques, **self.protocol)
                self._emit_estimate(strategy.describe(), est)
                means.append(est.mean_total_queue)
                if fc:
                    self._fc(strategy.describe(), est, fc)
                if sim.get("little"):
                    self._little(strategy.describe(), est)
            if len(means) > 1:
                arr = np.asarray(means)
                self.emit("sim_replication_mean", strategy.describe(), float(arr.mean()))
                self.emit("sim_replication_stderr", strategy.describe(),
                          float(arr.std(ddof=1) / np.sqrt(len(arr))))

    def _emit_estimate(self, label: str, est: SimEstimate):
        status = "converged" if est.converged else ("unstable" if est.unstable else "not_converged")
        self.emit("sim_mean_total_queue", label, est.mean_total_queue, provenance=f"seed={est.seed};{status}")
        row = {"scenario": self.cfg.scenario, "rho": self.rho}
        row.update(est.as_row())
        self.out.sim_rows.append(row)

    def _fc(self, label: str, est: SimEstimate, clique):
        try:
            report = fuhrmann_cooper_from_estimate(est, self.tp, clique)
        except (InsufficientDataError, UnavailableError) as e:
            logger.warning("[Orchestrator] ρ=%.4g FC 核对无法完成: %s", self.rho, e)
            return
        prov = f"seed={est.seed};lhs={report.lhs:.6g};rhs={report.rhs:.6g}"
        self.emit("fc_gap", label, report.gap, provenance=prov)

    def _little(self, label: str, est: SimEstimate):
        try:
            report = little_check(est, self.tp)
        except (InsufficientDataError, UnavailableError) as e:
            logger.warning("[Orchestrator] ρ=%.4g Little 核对无法完成: %s", self.rho, e)
            return
        self.emit("little_gap", label, report.gap, provenance=f"seed={est.seed}", vacuous=report.vacuous)
        for i, w in enumerate(report.delays):
            self.emit("delay", f"{label}[node{i}]", w, provenance=f"seed={est.seed}")


def traffic_profile(
    cfg: ExperimentConfig,
    rho: float,
    graph: InterferenceGraph,
    d: Optional[PartiteDecomposition],
) -> TrafficProfile:
    if cfg.traffic_mode == "partite":
        return TrafficProfile.partite(d, rho, cfg.split, mu=cfg.mu)
    return TrafficProfile.from_loads([rho] * graph.n_nodes, mu=cfg.mu)


def run_point(cfg: ExperimentConfig, rho: float, parts: Sequence[str], protocol: Dict[str, Any]) -> PointResult:
    """进程池的任务入口：只依赖可 pickle 的参数。"""
    with settings.overridden(cfg.overrides):
        return _run_point(cfg, rho, parts, protocol)


def _run_point(cfg: ExperimentConfig, rho: float, parts: Sequence[str], protocol: Dict[str, Any]) -> PointResult:
    graph = cfg.graph()
    d = cfg.decomposition(graph)
    point = _Point(cfg, rho, graph, d, protocol)
    if "stationary" in parts and cfg.stationary:
        point.run_stationary()
    # 单独的 mixing 子命令总是计算；完整运行只在配置给了 mixing_epsilon 时计算
    if "mixing" in parts and ("mixing_epsilon" in cfg.stationary or tuple(parts) == ("mixing",)):
        point.run_mixing()
    if "bounds" in parts:
        point.run_bounds()
    if "simulation" in parts and cfg.simulate:
        point.run_simulation()
    logger.info("[Orchestrator] %s ρ=%.4g 完成，%d 行", cfg.scenario, rho, len(point.out.rows))
    return point.out


# ================= 总控 =================

class ExperimentOrchestrator:
    """按配置跑完全部负载点并写出 CSV。"""

    def __init__(
        self,
        config: ExperimentConfig,
        out_dir: Optional[str] = None,
        threads: int = 1,
        seed: Optional[int] = None,
        scale: Optional[str] = None,
    ):
        if seed is not None:
            config = replace(config, seeds=(int(seed),))
        self.config = config
        self.out_dir = out_dir or config.output_dir
        self.threads = max(1, int(threads))
        self.scale = scale

    def protocol(self) -> Dict[str, Any]:
        """仿真协议参数：配置里的 simulation 段，--scale 给出时用对应规模覆盖起始时长和总时长上限。"""
        sim = self.config.simulation
        out: Dict[str, Any] = {}
        for key in ("start_horizon", "max_doublings", "horizon_cap", "acceptance"):
            if key in sim:
                out[key] = sim[key]
        if self.scale:
            sc = settings.scale(self.scale)
            out["start_horizon"] = sc["start_horizon"]
            out["horizon_cap"] = sc["horizon_cap"]
        return out

    def run(self, parts: Sequence[str] = PARTS) -> RunOutput:
        return self.write(self.collect(parts))

    def collect(self, parts: Sequence[str] = PARTS) -> List[PointResult]:
        """逐个负载点计算，不落盘；reproduce 会把几份配置的结果合在一起再写。"""
        cfg = self.config
        with settings.overridden(cfg.overrides):
            protocol = self.protocol()
        logger.info("[Orchestrator] 场景 %s：%d 个负载点，部分 %s，进程数 %d",
                    cfg.scenario, len(cfg.rhos), ",".join(parts), self.threads)
        if self.threads == 1 or len(cfg.rhos) == 1:
            results = [run_point(cfg, rho, tuple(parts), protocol) for rho in cfg.rhos]
        else:
            with ProcessPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(
                    run_point, [cfg] * len(cfg.rhos), cfg.rhos,
                    [tuple(parts)] * len(cfg.rhos), [protocol] * len(cfg.rhos),
                ))
        return results

    def write(self, results: List[PointResult]) -> RunOutput:
        cfg = self.config
        rows = [r for pr in results for r in pr.rows]
        files = {"results": write_results(os.path.join(self.out_dir, f"{cfg.scenario}_results.csv"), rows)}
        bound_rows = [r for pr in results for r in pr.bound_rows]
        if bound_rows:
            files["bounds"] = write_csv(
                os.path.join(self.out_dir, f"{cfg.scenario}_bounds.csv"),
                ["scenario", "sweep_rho", "series"] + REPORT_COLUMNS, bound_rows,
            )
        sim_rows = [r for pr in results for r in pr.sim_rows]
        if sim_rows:
            files["simulations"] = write_csv(
                os.path.join(self.out_dir, f"{cfg.scenario}_simulations.csv"), SIMULATION_COLUMNS, sim_rows,
            )
        logger.info("[Orchestrator] 场景 %s 完成：%d 行，文件 %s", cfg.scenario, len(rows), sorted(files))
        return RunOutput(rows=tuple(sorted(rows, key=ResultRow.sort_key)), files=files)


def run_config(path: str, out_dir: Optional[str] = None, threads: int = 1,
               seed: Optional[int] = None, scale: Optional[str] = None) -> RunOutput:
    return ExperimentOrchestrator(load_config(path), out_dir, threads, seed, scale).run()
