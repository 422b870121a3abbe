# simulator/engine.py
# -*- coding: utf-8 -*-
"""
联合过程 (U(t), L(t)) 的精确事件驱动仿真。

- 到达：每个节点一条独立的 Philox 流，按各自的 Poisson 过程预排下一次到达时间；
- 接入 / 服务：对当前所有可发生的跳转做指数竞争（race 流），每个事件后重抽，
  速率取当前队长下的 f(L)、g(L)，不做 thinning；
- 时间平均全部按分段常数积分，停在任意时刻都能续跑（估计协议的加倍窗口靠这个）。

随机流由 SeedSequence(seed).spawn 派生：第 0 条给竞争，第 1+i 条给节点 i 的到达，
增加节点不会改变已有节点的流。
"""

from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import settings
from core.errors import DomainError, NumericError
from bounds.reports import TrafficProfile
from simulator.strategy import Strategy
from topology.cliques import is_clique
from topology.graph import InterferenceGraph
from topology.state_space import ActivityState

logger = logging.getLogger(__name__)

# 每次从 Generator 批量取的随机数个数
_BLOCK = 4096

EVENT_LOG_COLUMNS = ["time", "event", "node", "queue", "state"]


class _Stream:
    """带缓冲的随机流：批量抽取标准指数和均匀数，逐个发放。"""

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._rng = np.random.Generator(np.random.Philox(seed_seq))
        self._exp: List[float] = []
        self._uni: List[float] = []

    def exp(self) -> float:
        if not self._exp:
            self._exp = self._rng.standard_exponential(_BLOCK).tolist()
            self._exp.reverse()
        return self._exp.pop()

    def uniform(self) -> float:
        if not self._uni:
            self._uni = self._rng.random(_BLOCK).tolist()
            self._uni.reverse()
        return self._uni.pop()


@dataclass(frozen=True)
class Snapshot:
    """某一时刻的累计量，用来算任意窗口 [t0, t1] 上的时间平均。"""

    clock: float
    total_area: float
    node_area: Tuple[float, ...]
    active_time: Tuple[float, ...]
    idle_time: Tuple[float, ...]
    idle_area: Tuple[Tuple[float, ...], ...]
    sojourn_sum: Tuple[float, ...]
    departures: Tuple[int, ...]
    events: int


@dataclass(frozen=True)
class TrajectoryStats:
    """
    窗口 [start, end] 上的轨迹统计。

    nonserving_means[c] 是团 cliques[c] 上 L_i 在非服务区间内的条件时间平均，
    该窗口内从未出现非服务区间时为 None。
    """

    start: float
    end: float
    mean_total_queue: float
    per_node_means: Tuple[float, ...]
    theta_hat: Tuple[float, ...]
    cliques: Tuple[Tuple[int, ...], ...]
    nonserving_fraction: Tuple[float, ...]
    nonserving_means: Tuple[Optional[Tuple[float, ...]], ...]
    sojourn_means: Optional[Tuple[float, ...]]
    departures: Tuple[int, ...]
    events: int
    runaway: bool
    occupancy: Dict[int, float] = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return self.end - self.start


class SimState:
    """
    单条轨迹的全部可变状态：激活集合、队长、时钟和随机流。

    对外只通过 run_until / snapshot / stats 访问；同一 seed、同一调用序列逐位可复现。
    """

    def __init__(
        self,
        graph: InterferenceGraph,
        tp: TrafficProfile,
        strategy: Strategy,
        seed: int,
        cliques: Sequence[Sequence[int]] = (),
        track_sojourn: bool = True,
        queue_cap: Optional[int] = None,
        debug: bool = False,
        event_log: Optional[str] = None,
    ):
        if tp.n_nodes != graph.n_nodes:
            raise DomainError("流量配置和干扰图的节点数不一致", traffic=tp.n_nodes, graph=graph.n_nodes)
        strategy.check(tp)
        n = graph.n_nodes
        self.graph = graph
        self.strategy = strategy
        self.n = n
        self.lam = [float(x) for x in tp.lam]
        self.mu = [float(x) for x in tp.mu]
        self.nbr_mask = graph.neighbor_masks()
        self.nbrs = [graph.neighbors(i) for i in range(n)]
        self.queue_cap = int(queue_cap if queue_cap is not None else settings.cap("queue"))
        self.track_sojourn = track_sojourn
        self.debug = debug

        children = np.random.SeedSequence(int(seed)).spawn(n + 1)
        self._race = _Stream(children[0])
        self._arrivals = [_Stream(children[1 + i]) for i in range(n)]

        # 状态
        self.clock = 0.0
        self.mask = 0
        self.active = [False] * n
        self.blocked = [0] * n
        self.queues = [0] * n
        self.in_dummy = [False] * n
        self.runaway = False
        self.events = 0

        # 速率表缓存：rule_index -> {L: (f, g)}
        self._rate_cache: Dict[int, Dict[int, Tuple[float, float]]] = {}
        self.node_rate = [0.0] * n
        for i in range(n):
            self.node_rate[i] = self._inactive_rate(i)
        self.next_arrival = [
            self._arrivals[i].exp() / self.lam[i] if self.lam[i] > 0 else float("inf") for i in range(n)
        ]

        # 积分量
        self.total_queue = 0
        self.total_area = 0.0
        self._node_area = [0.0] * n
        self._node_last = [0.0] * n
        self._active_time = [0.0] * n
        self._active_since = [0.0] * n
        self._occupancy: Dict[int, float] = {}
        self._mask_since = 0.0

        self.cliques: Tuple[Tuple[int, ...], ...] = tuple(tuple(sorted(int(v) for v in c)) for c in cliques)
        for c in self.cliques:
            if not c or not is_clique(graph, c):
                raise DomainError("跟踪的节点集合不是团", clique=list(c))
        self._clique_busy = [0] * len(self.cliques)
        self._idle_time = [0.0] * len(self.cliques)
        self._idle_area = [[0.0] * len(c) for c in self.cliques]
        self._member_of: List[List[int]] = [[] for _ in range(n)]
        for ci, c in enumerate(self.cliques):
            for v in c:
                self._member_of[v].append(ci)

        self._fifo: List[Deque[float]] = [deque() for _ in range(n)]
        self._sojourn_sum = [0.0] * n
        self._departures = [0] * n

        self._log_file = None
        self._log_writer = None
        if event_log:
            self._log_file = open(event_log, "w", encoding="utf-8", newline="")
            self._log_writer = csv.writer(self._log_file)
            self._log_writer.writerow(EVENT_LOG_COLUMNS)

    # --- 速率 ---

    def _rates_at(self, i: int, queue: int) -> Tuple[float, float]:
        table = self._rate_cache.setdefault(self.strategy.rule_index(i), {})
        hit = table.get(queue)
        if hit is None:
            hit = (self.strategy.activation_rate(i, queue), self.strategy.deactivation_rate(i, queue))
            table[queue] = hit
        return hit

    def _inactive_rate(self, i: int) -> float:
        if self.blocked[i]:
            return 0.0
        return self._rates_at(i, self.queues[i])[0]

    # --- 积分 ---

    def _advance(self, t: float):
        dt = t - self.clock
        if dt > 0:
            self.total_area += dt * self.total_queue
            for ci, c in enumerate(self.cliques):
                if self._clique_busy[ci] == 0:
                    self._idle_time[ci] += dt
                    area = self._idle_area[ci]
                    for pos, v in enumerate(c):
                        area[pos] += dt * self.queues[v]
        self.clock = t

    def _flush_node(self, i: int):
        self._node_area[i] += self.queues[i] * (self.clock - self._node_last[i])
        self._node_last[i] = self.clock

    def _set_mask(self, new_mask: int):
        self._occupancy[self.mask] = self._occupancy.get(self.mask, 0.0) + (self.clock - self._mask_since)
        self._mask_since = self.clock
        self.mask = new_mask

    def _log(self, event: str, node: int):
        if self._log_writer is not None:
            self._log_writer.writerow([
                f"{self.clock:.9g}", event, node, self.queues[node],
                ActivityState(self.mask, self.n).bitstring(),
            ])

    # --- 事件 ---

    def _arrive(self, i: int):
        self._flush_node(i)
        self.queues[i] += 1
        self.total_queue += 1
        if self.track_sojourn:
            self._fifo[i].append(self.clock)
        self.next_arrival[i] = self.clock + self._arrivals[i].exp() / self.lam[i]
        if self.active[i]:
            if self.in_dummy[i]:
                # dummy 传输中到达：真实包立即开始一次新的 exp(μ_i) 传输
                self.in_dummy[i] = False
        else:
            self.node_rate[i] = self._inactive_rate(i)
        self._log("arrival", i)
        if self.queues[i] > self.queue_cap:
            self.runaway = True
            logger.warning("[Simulator] 节点 %d 队长 %d 超过上限 %d，判为失控（t=%.6g）",
                           i, self.queues[i], self.queue_cap, self.clock)

    def _activate(self, i: int):
        self.active[i] = True
        self._active_since[i] = self.clock
        self._set_mask(self.mask | (1 << i))
        for j in self.nbrs[i]:
            self.blocked[j] += 1
            self.node_rate[j] = 0.0
        for ci in self._member_of[i]:
            self._clique_busy[ci] += 1
        self.node_rate[i] = self.mu[i]
        self.in_dummy[i] = self.queues[i] == 0
        self._log("activate", i)
        if self.debug:
            self._assert_feasible()

    def _deactivate(self, i: int):
        self.active[i] = False
        self.in_dummy[i] = False
        self._active_time[i] += self.clock - self._active_since[i]
        self._set_mask(self.mask & ~(1 << i))
        for ci in self._member_of[i]:
            self._clique_busy[ci] -= 1
        for j in self.nbrs[i]:
            self.blocked[j] -= 1
            if not self.blocked[j]:
                self.node_rate[j] = self._inactive_rate(j)
        self.node_rate[i] = self._inactive_rate(i)
        self._log("deactivate", i)

    def _complete(self, i: int):
        """服务完成：μ_i - g(L) 的部分背靠背继续，g(L) 的部分完成后去激活。"""
        queue = self.queues[i]
        g = self._rates_at(i, queue)[1]
        leave = self._race.uniform() * self.mu[i] < g
        if queue > 0:
            self._flush_node(i)
            self.queues[i] -= 1
            self.total_queue -= 1
            if self.track_sojourn:
                arrived = self._fifo[i].popleft()
                self._sojourn_sum[i] += self.clock - arrived
            self._departures[i] += 1
            self._log("departure", i)
        else:
            self._log("dummy_completion", i)
        if self.queues[i] == 0 and not self.strategy.dummy_packets:
            leave = True
        if leave:
            self._deactivate(i)
        else:
            self.in_dummy[i] = self.queues[i] == 0

    def _assert_feasible(self):
        for i in range(self.n):
            if self.active[i] and self.nbr_mask[i] & self.mask:
                raise NumericError("出现相邻节点同时激活的状态", node=i, state=ActivityState(self.mask, self.n).bitstring())

    # --- 主循环 ---

    def run_until(self, t_end: float):
        """推进到 t_end（或失控为止）；t_end 不晚于当前时钟时什么都不做。"""
        if t_end <= self.clock or self.runaway:
            return
        n = self.n
        node_rate = self.node_rate
        next_arrival = self.next_arrival
        race = self._race
        while True:
            total = sum(node_rate)
            t_race = self.clock + race.exp() / total if total > 0 else float("inf")
            i_arr = min(range(n), key=next_arrival.__getitem__)
            t_arr = next_arrival[i_arr]
            t_next = t_race if t_race < t_arr else t_arr
            if t_next > t_end:
                # 竞争时间丢弃：无记忆性保证从 t_end 重新抽样等价
                self._advance(t_end)
                break
            self._advance(t_next)
            self.events += 1
            if t_arr <= t_race:
                self._arrive(i_arr)
                if self.runaway:
                    break
                continue
            target = race.uniform() * total
            acc = 0.0
            chosen = n - 1
            for i in range(n):
                acc += node_rate[i]
                if target < acc:
                    chosen = i
                    break
            while node_rate[chosen] == 0.0 and chosen > 0:
                chosen -= 1
            if self.active[chosen]:
                self._complete(chosen)
            else:
                self._activate(chosen)

    # --- 汇总 ---

    def snapshot(self) -> Snapshot:
        for i in range(self.n):
            self._flush_node(i)
        active_time = tuple(
            self._active_time[i] + (self.clock - self._active_since[i] if self.active[i] else 0.0)
            for i in range(self.n)
        )
        return Snapshot(
            clock=self.clock,
            total_area=self.total_area,
            node_area=tuple(self._node_area),
            active_time=active_time,
            idle_time=tuple(self._idle_time),
            idle_area=tuple(tuple(a) for a in self._idle_area),
            sojourn_sum=tuple(self._sojourn_sum),
            departures=tuple(self._departures),
            events=self.events,
        )

    def occupancy(self) -> Dict[int, float]:
        """每个激活状态（位掩码）累计停留的时间，含当前状态。"""
        out = dict(self._occupancy)
        out[self.mask] = out.get(self.mask, 0.0) + (self.clock - self._mask_since)
        return out

    def stats(self, since: Optional[Snapshot] = None) -> TrajectoryStats:
        """窗口 [since.clock, clock] 上的统计；since 为空时从 0 开始。"""
        now = self.snapshot()
        start = since.clock if since is not None else 0.0
        span = now.clock - start
        if span <= 0:
            raise DomainError("统计窗口长度必须为正", start=start, end=now.clock)

        def diff(a, b_attr):
            base = getattr(since, b_attr) if since is not None else None
            if base is None:
                return a
            return tuple(x - y for x, y in zip(a, base))

        node_area = diff(now.node_area, "node_area")
        active = diff(now.active_time, "active_time")
        idle = diff(now.idle_time, "idle_time")
        base_idle_area = since.idle_area if since is not None else tuple((0.0,) * len(c) for c in self.cliques)
        ns_means: List[Optional[Tuple[float, ...]]] = []
        for ci in range(len(self.cliques)):
            if idle[ci] <= 0:
                ns_means.append(None)
                continue
            ns_means.append(tuple(
                (a - b) / idle[ci] for a, b in zip(now.idle_area[ci], base_idle_area[ci])
            ))
        departures = diff(now.departures, "departures")
        sojourn = None
        if self.track_sojourn:
            sums = diff(now.sojourn_sum, "sojourn_sum")
            sojourn = tuple(s / k if k > 0 else float("nan") for s, k in zip(sums, departures))
        total_area = now.total_area - (since.total_area if since is not None else 0.0)
        return TrajectoryStats(
            start=start,
            end=now.clock,
            mean_total_queue=total_area / span,
            per_node_means=tuple(a / span for a in node_area),
            theta_hat=tuple(a / span for a in active),
            cliques=self.cliques,
            nonserving_fraction=tuple(x / span for x in idle),
            nonserving_means=tuple(ns_means),
            sojourn_means=sojourn,
            departures=tuple(int(k) for k in departures),
            events=now.events - (since.events if since is not None else 0),
            runaway=self.runaway,
            occupancy=self.occupancy() if since is None else {},
        )

    def close(self):
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None
            self._log_writer = None


def simulate(
    graph: InterferenceGraph,
    tp: TrafficProfile,
    strategy: Strategy,
    horizon: float,
    seed: int,
    cliques: Sequence[Sequence[int]] = (),
    track_sojourn: bool = True,
    queue_cap: Optional[int] = None,
    debug: bool = False,
    event_log: Optional[str] = None,
) -> TrajectoryStats:
    """从空系统出发仿真到 horizon，返回 [0, horizon] 上的统计（失控时截到失控时刻）。"""
    if not horizon > 0:
        raise DomainError("仿真时长必须为正", horizon=horizon)
    state = SimState(graph, tp, strategy, seed, cliques, track_sojourn, queue_cap, debug, event_log)
    try:
        state.run_until(float(horizon))
        stats = state.stats()
    finally:
        state.close()
    logger.debug("[Simulator] %s：t=%.3g，事件 %d，E[ΣL]≈%.4g",
                 strategy.describe(), stats.end, stats.events, stats.mean_total_queue)
    return stats
