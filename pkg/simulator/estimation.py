# simulator/estimation.py
# -*- coding: utf-8 -*-
"""
平均总队长的加倍估计协议。

从空系统出发跑到 t，再续跑到 2t，比较 [0, t] 与 [t, 2t] 两个窗口的平均总队长：
相差不到 5% 就接受 [0, 2t] 的平均；否则 t ← 2t，沿同一条轨迹继续。
加倍次数和总时长都有上限，到顶仍不收敛就报告 converged = False（不是异常）。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from core import settings
from core.errors import DomainError
from bounds.reports import TrafficProfile
from simulator.engine import SimState
from simulator.strategy import Strategy
from topology.graph import InterferenceGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimEstimate:
    """
    horizon_used 为最终的总仿真时长 2t，window 为最终的 t。
    unstable 表示队长超过上限被提前截停。
    """

    mean_total_queue: float
    per_node_means: Tuple[float, ...]
    horizon_used: float
    window: float
    converged: bool
    half_averages: Tuple[float, float]
    theta_hat: Tuple[float, ...]
    nonserving_means: Tuple[Optional[Tuple[float, ...]], ...]
    cliques: Tuple[Tuple[int, ...], ...] = ()
    sojourn_means: Optional[Tuple[float, ...]] = None
    doublings: int = 0
    unstable: bool = False
    seed: int = 0
    strategy: str = ""
    occupancy: Dict[int, float] = field(default_factory=dict)

    @property
    def relative_gap(self) -> float:
        a1, a2 = self.half_averages
        top = max(a1, a2)
        return 0.0 if top <= 0 else abs(a1 - a2) / top

    def as_row(self) -> Dict[str, Any]:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "horizon": self.horizon_used,
            "mean_total_queue": self.mean_total_queue,
            "converged": self.converged,
            "unstable": self.unstable,
            "window_1": self.half_averages[0],
            "window_2": self.half_averages[1],
            "doublings": self.doublings,
        }


def _protocol(
    overrides: Optional[Dict[str, Any]],
    start_horizon: Optional[float],
    max_doublings: Optional[int],
    horizon_cap: Optional[float],
    acceptance: Optional[float],
) -> Tuple[float, int, float, float]:
    start = float(start_horizon if start_horizon is not None else settings.get("protocol", "start_horizon", overrides))
    doublings = int(max_doublings if max_doublings is not None else settings.get("protocol", "max_doublings", overrides))
    accept = float(acceptance if acceptance is not None else settings.get("protocol", "acceptance", overrides))
    cap = float(horizon_cap) if horizon_cap is not None else math.inf
    if start <= 0 or doublings < 0 or not (0 < accept < 1):
        raise DomainError("估计协议参数非法", start_horizon=start, max_doublings=doublings, acceptance=accept)
    return start, doublings, cap, accept


def estimate_mean_queue(
    graph: InterferenceGraph,
    tp: TrafficProfile,
    strategy: Strategy,
    seed: int,
    start_horizon: Optional[float] = None,
    max_doublings: Optional[int] = None,
    horizon_cap: Optional[float] = None,
    acceptance: Optional[float] = None,
    cliques: Sequence[Sequence[int]] = (),
    track_sojourn: bool = True,
    queue_cap: Optional[int] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> SimEstimate:
    """
    - start_horizon / max_doublings / acceptance 缺省取 settings.yaml 的 protocol 段；
    - horizon_cap 限制总时长 2t（桌面规模用），缺省不限；
    - cliques 给出要测非服务区间队长 L_{i,C} 的团。
    """
    t, max_doub, cap, accept = _protocol(overrides, start_horizon, max_doublings, horizon_cap, acceptance)
    state = SimState(graph, tp, strategy, seed, cliques=cliques, track_sojourn=track_sojourn, queue_cap=queue_cap)
    try:
        state.run_until(t)
        doublings = 0
        while True:
            mid = state.snapshot()
            state.run_until(2.0 * t)
            if state.runaway:
                stats = state.stats()
                logger.warning("[Simulator] %s：t=%.3g 处队长失控，判为不稳定", strategy.describe(), stats.end)
                return _finish(stats, (stats.mean_total_queue, stats.mean_total_queue), t, False, doublings,
                               True, seed, strategy)
            first = mid.total_area / t
            second = (state.total_area - mid.total_area) / t
            top = max(first, second)
            gap = 0.0 if top <= 0 else abs(first - second) / top
            logger.debug("[Simulator] t=%.3g：两个窗口 %.5g / %.5g，相对差 %.3g", t, first, second, gap)
            if gap < accept:
                return _finish(state.stats(), (first, second), t, True, doublings, False, seed, strategy)
            if doublings >= max_doub or 4.0 * t > cap:
                logger.warning("[Simulator] %s：加倍 %d 次后两个窗口仍相差 %.1f%%，不收敛",
                               strategy.describe(), doublings, 100.0 * gap)
                return _finish(state.stats(), (first, second), t, False, doublings, False, seed, strategy)
            t *= 2.0
            doublings += 1
    finally:
        state.close()


def _finish(stats, halves, t, converged, doublings, unstable, seed, strategy) -> SimEstimate:
    return SimEstimate(
        mean_total_queue=stats.mean_total_queue,
        per_node_means=stats.per_node_means,
        horizon_used=stats.end,
        window=t,
        converged=converged,
        half_averages=(float(halves[0]), float(halves[1])),
        theta_hat=stats.theta_hat,
        nonserving_means=stats.nonserving_means,
        cliques=stats.cliques,
        sojourn_means=stats.sojourn_means,
        doublings=doublings,
        unstable=unstable,
        seed=int(seed),
        strategy=strategy.describe(),
        occupancy=stats.occupancy,
    )


@dataclass(frozen=True)
class ReplicationSummary:
    mean: float
    stderr: float
    estimates: Tuple[SimEstimate, ...]

    @property
    def all_converged(self) -> bool:
        return all(e.converged for e in self.estimates)


def replicate_mean_queue(
    graph: InterferenceGraph,
    tp: TrafficProfile,
    strategy: Strategy,
    seeds: Sequence[int],
    nodes: Optional[Sequence[int]] = None,
    **protocol: Any,
) -> ReplicationSummary:
    """独立重复（每个 seed 一条轨迹），返回 Σ_{i∈nodes} E[L_i] 的均值和标准误。"""
    if not seeds:
        raise DomainError("至少需要一个 seed")
    estimates = tuple(estimate_mean_queue(graph, tp, strategy, s, **protocol) for s in seeds)
    idx = list(range(graph.n_nodes)) if nodes is None else sorted(int(i) for i in nodes)
    values = np.array([sum(e.per_node_means[i] for i in idx) for e in estimates])
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else float("nan")
    return ReplicationSummary(mean=float(values.mean()), stderr=stderr, estimates=estimates)
