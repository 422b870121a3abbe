# bounds/paths.py
# -*- coding: utf-8 -*-
"""
状态图上的 maximin 路径与多部集合 S_l(S)。

M(u, v) = 沿 u→v 所有路径上 H 最小值的最大者（M(u, u) = ∞）。
状态图的跳转双向可行，所以 M 对称；用大顶堆做 best-first 的最宽路径搜索。
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import sparse

from core.errors import DomainError, PreconditionError, WrongTopologyError
from bounds.fixed_rate import drift_coefficients, state_boundary
from bounds.reports import TrafficProfile
from topology.partite import PartiteDecomposition, h_values
from topology.state_space import StateSpace

logger = logging.getLogger(__name__)


def _adjacency(ss: StateSpace) -> sparse.csr_matrix:
    tr = ss.transitions()
    n = len(ss)
    data = np.ones(len(tr["src"]), dtype=np.int8)
    return sparse.csr_matrix((data, (tr["src"], tr["dst"])), shape=(n, n))


def widest_from(ss: StateSpace, H: np.ndarray, sources: Iterable[int], adjacency=None) -> np.ndarray:
    """
    多源 maximin 搜索：返回 max_{u∈sources} M(u, v)，源点自身记为 +∞。
    路径的值包含起点的 H；并列时按状态序号出堆。
    """
    adj = adjacency if adjacency is not None else _adjacency(ss)
    indptr, indices = adj.indptr, adj.indices
    best = np.full(len(ss), -np.inf)
    heap: List[Tuple[float, int]] = []
    src = sorted({int(s) for s in sources})
    if not src:
        raise DomainError("maximin 搜索需要至少一个源状态")
    for s in src:
        best[s] = H[s]
        heapq.heappush(heap, (-H[s], s))
    done = np.zeros(len(ss), dtype=bool)
    while heap:
        neg, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        value = -neg
        for v in indices[indptr[u]:indptr[u + 1]]:
            cand = min(value, H[v])
            if cand > best[v]:
                best[v] = cand
                heapq.heappush(heap, (-cand, int(v)))
    best[src] = np.inf
    return best


def maximin_paths(ss: StateSpace, d: PartiteDecomposition, sources: Iterable[int]) -> Dict[int, np.ndarray]:
    """每个源状态 u 的一行 M(u, ·)。"""
    H = h_values(ss, d)
    adj = _adjacency(ss)
    return {int(s): widest_from(ss, H, [s], adj) for s in sources}


@dataclass(frozen=True, eq=False)
class PathStructure:
    """
    给定 S ⊆ V_k 的多部路径结构。

    m_values[l] = m_l(S)，s_l_sets[l] = S_l(S)（布尔指示），h_l[l] = H_l(S)，
    h_star = H*(S)；h_star_min 只有在扫描过单点 S 时才有值。
    """

    component: int
    node_subset: Tuple[int, ...]
    delta_set: np.ndarray
    delta: Optional[float]
    m_values: Tuple[float, ...]
    s_l_sets: Tuple[np.ndarray, ...]
    boundaries: Tuple[np.ndarray, ...]
    h_l: Tuple[float, ...]
    h_star: float
    h_star_min: Optional[float] = None
    h_star_min_witness: Optional[Tuple[int, ...]] = None


def _structure(
    ss: StateSpace,
    d: PartiteDecomposition,
    tp: TrafficProfile,
    weights,
    S: List[int],
    H: np.ndarray,
    adj,
) -> PathStructure:
    comps = {d.component_of(i) for i in S}
    if len(comps) != 1:
        raise DomainError("S 必须落在同一个分量内", S=S)
    if d.K < 2:
        raise WrongTopologyError("路径结构至少需要两个分量", K=d.K)
    k = comps.pop()

    drift = drift_coefficients(ss, tp, weights, S)
    delta_set = drift.delta_set
    if len(delta_set) == 0:
        raise PreconditionError("Δ(S) 为空", S=S)
    if len(delta_set) == len(ss):
        raise PreconditionError("Δ(S) = Ω（S 上没有到达），S_l(S) 无定义", S=S)

    m_values: List[float] = [0.0] * d.K
    sets: List[np.ndarray] = [np.zeros(0, dtype=bool)] * d.K
    for l in range(d.K):
        if l == k:
            continue
        v_l = ss.ordinal(d.incidence_mask(l))
        row = widest_from(ss, H, [v_l], adj)
        m_values[l] = float(np.max(row[delta_set]))
        sets[l] = row > m_values[l]
    m_values[k] = max(m_values[l] for l in range(d.K) if l != k)
    sets[k] = widest_from(ss, H, delta_set, adj) > m_values[k]

    boundaries, h_l = [], []
    for l in range(d.K):
        b = state_boundary(ss, sets[l])
        boundaries.append(b)
        h_l.append(float(H[b].max()) if len(b) else 0.0)
    return PathStructure(
        component=k,
        node_subset=tuple(S),
        delta_set=delta_set,
        delta=drift.delta,
        m_values=tuple(m_values),
        s_l_sets=tuple(sets),
        boundaries=tuple(boundaries),
        h_l=tuple(h_l),
        h_star=min(h_l),
    )


def partite_sets(
    ss: StateSpace,
    d: PartiteDecomposition,
    tp: TrafficProfile,
    weights,
    S: Iterable[int],
    scan_min: bool = True,
) -> PathStructure:
    """Δ(S)、δ(S)、m_l(S)、S_l(S)、H_l(S)、H*(S)；scan_min 时再对每个单点 S 求 H*_min。"""
    H = h_values(ss, d)
    adj = _adjacency(ss)
    idx = sorted({int(i) for i in S})
    ps = _structure(ss, d, tp, weights, idx, H, adj)
    if not scan_min:
        return ps
    h_min, witness = h_star_min(ss, d, tp, weights, H=H, adj=adj)
    logger.debug("[Bounds] H*(S)=%.4g，H*_min=%.4g（S=%s）", ps.h_star, h_min, witness)
    return replace(ps, h_star_min=h_min, h_star_min_witness=witness)


def h_star_min(ss: StateSpace, d: PartiteDecomposition, tp: TrafficProfile, weights, H=None, adj=None):
    """对所有单点 S = {i} 求 H*(S) 的最小值，返回 (值, 取到最小值的 S)。"""
    H = h_values(ss, d) if H is None else H
    adj = _adjacency(ss) if adj is None else adj
    best, witness = np.inf, None
    for i in range(ss.n_nodes):
        if tp.lam[i] <= 0:
            continue
        value = _structure(ss, d, tp, weights, [i], H, adj).h_star
        if value < best:
            best, witness = value, (i,)
    if witness is None:
        raise PreconditionError("所有节点的到达率为 0，H*_min 无定义")
    return float(best), witness
