# simulator/checks.py
# -*- coding: utf-8 -*-
"""
仿真结果上的两条恒等式核对：Fuhrmann-Cooper 分解和 Little 定律。
另外给出固定速率下激活状态占用率和乘积形式之间的全变差距离。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Tuple

import numpy as np

from core.errors import DomainError, InfeasibleLoadError, InsufficientDataError, UnavailableError
from bounds.reports import TrafficProfile
from simulator.estimation import SimEstimate, estimate_mean_queue
from simulator.strategy import Strategy
from stationary.distribution import StationaryDistribution
from topology.cliques import is_clique
from topology.graph import InterferenceGraph

logger = logging.getLogger(__name__)

# 两条恒等式默认的通过阈值（相对差）
IDENTITY_TOLERANCE = 0.05


def _relative_gap(a: float, b: float) -> float:
    top = max(abs(a), abs(b))
    return 0.0 if top == 0 else abs(a - b) / top


@dataclass(frozen=True)
class FuhrmannCooperReport:
    """
    lhs = Σ_{i∈C} E[L_i]
    rhs = λ_C Σ(λ_i/μ_i²)/(1-ρ_C) + Σ E[L_{i,C}] + ρ_C
    """

    clique: Tuple[int, ...]
    lhs: float
    rhs: float
    queueing_term: float
    nonserving_term: float
    rho_c: float
    gap: float
    estimate: Optional[SimEstimate] = None

    @property
    def passed(self) -> bool:
        return self.gap < IDENTITY_TOLERANCE


def fuhrmann_cooper_check(
    graph: InterferenceGraph,
    tp: TrafficProfile,
    strategy: Strategy,
    clique: Iterable[int],
    seed: int,
    **protocol: Any,
) -> FuhrmannCooperReport:
    """在同一条轨迹上测量分解式两边；protocol 透传给 estimate_mean_queue。"""
    idx = _checked_clique(graph, tp, clique)
    if tp.clique_load(idx)[0] == 0:
        return FuhrmannCooperReport(idx, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    est = estimate_mean_queue(graph, tp, strategy, seed, cliques=[idx], **protocol)
    return fuhrmann_cooper_from_estimate(est, tp, idx)


def _checked_clique(graph: InterferenceGraph, tp: TrafficProfile, clique: Iterable[int]) -> Tuple[int, ...]:
    idx = tuple(sorted({int(i) for i in clique}))
    if not idx or not is_clique(graph, idx):
        raise DomainError("给定节点集合不是团", clique=list(idx))
    _, rho_c = tp.clique_load(idx)
    if rho_c >= 1.0:
        raise InfeasibleLoadError("团负载 ρ_C 必须小于 1", rho_c=rho_c)
    return idx


def fuhrmann_cooper_from_estimate(est: SimEstimate, tp: TrafficProfile, clique: Iterable[int]) -> FuhrmannCooperReport:
    """est 必须是带着这个团跑出来的（est.cliques 里有它）。"""
    idx = tuple(sorted({int(i) for i in clique}))
    lam_c, rho_c = tp.clique_load(idx)
    if lam_c == 0:
        return FuhrmannCooperReport(idx, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, estimate=est)
    if idx not in est.cliques:
        raise UnavailableError("这次仿真没有跟踪该团的非服务区间", clique=list(idx))
    nonserving = est.nonserving_means[est.cliques.index(idx)]
    if nonserving is None:
        raise InsufficientDataError("整条轨迹上团始终在服务，测不到非服务区间的队长", clique=list(idx))
    if not est.converged:
        logger.warning("[Simulator] FC 核对用的估计没有收敛，差值仅供参考")

    lhs = float(sum(est.per_node_means[i] for i in idx))
    lam, mu = tp.lam, tp.mu
    queueing = float(lam_c * sum(lam[i] / mu[i] ** 2 for i in idx) / (1.0 - rho_c))
    ns_term = float(sum(nonserving))
    rhs = queueing + ns_term + rho_c
    report = FuhrmannCooperReport(
        clique=idx, lhs=lhs, rhs=rhs, queueing_term=queueing, nonserving_term=ns_term,
        rho_c=rho_c, gap=_relative_gap(lhs, rhs), estimate=est,
    )
    logger.info("[Simulator] FC 分解：lhs=%.5g rhs=%.5g 相对差 %.3g", lhs, rhs, report.gap)
    return report


@dataclass(frozen=True)
class LittleReport:
    """lhs = Σ λ_i Ŵ_i，rhs = Σ L̂_i；delays 为每个节点的平均逗留时间 Ŵ_i。"""

    lhs: float
    rhs: float
    gap: float
    delays: Tuple[float, ...]
    vacuous: bool = False

    @property
    def passed(self) -> bool:
        return self.vacuous or self.gap < IDENTITY_TOLERANCE


def little_check(est: SimEstimate, tp: TrafficProfile) -> LittleReport:
    if est.sojourn_means is None:
        raise UnavailableError("这次仿真没有记录逐包逗留时间（track_sojourn=False）")
    if len(est.sojourn_means) != tp.n_nodes:
        raise DomainError("估计结果和流量配置的节点数不一致")
    if float(np.sum(tp.lam)) == 0.0:
        return LittleReport(0.0, est.mean_total_queue, 0.0, tuple(0.0 for _ in est.sojourn_means), vacuous=True)
    delays = []
    for i, (w, lam) in enumerate(zip(est.sojourn_means, tp.lam)):
        if lam > 0 and not np.isfinite(w):
            raise InsufficientDataError("有到达的节点没有离开的包，无法估计时延", node=i)
        delays.append(float(w) if lam > 0 else 0.0)
    lhs = float(np.dot(tp.lam, delays))
    rhs = float(sum(est.per_node_means))
    return LittleReport(lhs=lhs, rhs=rhs, gap=_relative_gap(lhs, rhs), delays=tuple(delays))


def occupancy_distance(est: SimEstimate, dist: StationaryDistribution) -> float:
    """激活状态的经验时间占用率与 π 之间的全变差距离。"""
    if not est.occupancy:
        raise UnavailableError("估计结果里没有状态占用记录")
    ss = dist.state_space
    total = sum(est.occupancy.values())
    empirical = np.zeros(len(ss))
    for mask, time in est.occupancy.items():
        empirical[ss.ordinal(int(mask))] += time / total
    return float(0.5 * np.abs(empirical - dist.pi).sum())
