# topology/partite.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from core.errors import (
    AssumptionViolatedError,
    CliqueConditionError,
    DecompositionError,
    InvalidDescriptorError,
    NotIndependentError,
)
from topology.graph import InterferenceGraph
from topology.state_space import ActivityState, StateSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartiteDecomposition:
    """
    K 部分解：V_1, ..., V_K 互不干扰，且每个节点都在某个大小为 K 的团里。

    sizes[k] = M_k，M = max M_k，M_star = 第二大的分量大小（K=1 时为 0）。
    """

    components: Tuple[Tuple[int, ...], ...]
    n_nodes: int

    @property
    def K(self) -> int:
        return len(self.components)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(c) for c in self.components)

    @property
    def M(self) -> int:
        return max(self.sizes)

    @property
    def M_star(self) -> int:
        ordered = sorted(self.sizes, reverse=True)
        return ordered[1] if len(ordered) > 1 else 0

    @property
    def membership(self) -> np.ndarray:
        """节点 → 分量下标。"""
        out = np.empty(self.n_nodes, dtype=np.int64)
        for k, comp in enumerate(self.components):
            out[list(comp)] = k
        return out

    def component_of(self, node: int) -> int:
        for k, comp in enumerate(self.components):
            if node in comp:
                return k
        raise InvalidDescriptorError("节点不在任何分量中", node=node)

    def incidence_mask(self, k: int) -> int:
        """v^(k) 的位掩码。"""
        mask = 0
        for i in self.components[k]:
            mask |= 1 << i
        return mask


# === 分量来源 ===

def _grid_parity(graph: InterferenceGraph) -> List[List[int]]:
    # V_1 = {(i, j): (i + j) 为奇数}，V_2 = 偶数；从 0 还是从 1 编号不影响奇偶
    cols = graph.descriptor["cols"]
    odd, even = [], []
    for node in range(graph.n_nodes):
        r, c = divmod(node, cols)
        (odd if (r + c) % 2 == 1 else even).append(node)
    return [odd, even] if odd else [even]


def _bfs_two_coloring(graph: InterferenceGraph) -> List[List[int]]:
    nbrs = [graph.neighbors(i) for i in range(graph.n_nodes)]
    color = [-1] * graph.n_nodes
    for start in range(graph.n_nodes):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in nbrs[v]:
                if color[w] == -1:
                    color[w] = 1 - color[v]
                    queue.append(w)
                elif color[w] == color[v]:
                    raise DecompositionError("图不是二部图，不能做二部分解", edge=(min(v, w), max(v, w)))
    parts = [[i for i in range(graph.n_nodes) if color[i] == c] for c in (0, 1)]
    return [p for p in parts if p]


def _default_components(graph: InterferenceGraph) -> List[List[int]]:
    kind = graph.kind
    if kind == "complete_partite":
        out, start = [], 0
        for size in graph.descriptor["sizes"]:
            out.append(list(range(start, start + size)))
            start += size
        return out
    if kind == "grid":
        return _grid_parity(graph)
    return _bfs_two_coloring(graph)


def partite_decomposition(
    graph: InterferenceGraph,
    components: Optional[Sequence[Iterable[int]]] = None,
) -> PartiteDecomposition:
    """
    构造并校验 K 部分解。

    - components 为空：完全多部图用构造时的分量，网格用 (行+列) 奇偶着色，
      其它图做二部 BFS 着色（奇环等非二部图直接报错）；
    - 校验：分量是 V 的划分、分量内无边、每个节点都在某个大小为 K 的团里。
    """
    if components is None:
        comps = _default_components(graph)
    else:
        comps = [sorted(int(i) for i in c) for c in components]
        seen: List[int] = [i for c in comps for i in c]
        if any(len(c) == 0 for c in comps):
            raise InvalidDescriptorError("分量不能为空")
        if sorted(seen) != list(range(graph.n_nodes)):
            raise InvalidDescriptorError("给定分量不是 V 的划分", n_nodes=graph.n_nodes)

    for k, comp in enumerate(comps):
        for a_idx, a in enumerate(comp):
            for b in comp[a_idx + 1:]:
                if graph.has_edge(a, b):
                    raise NotIndependentError("分量内部有边", component=k, edge=(a, b))

    decomposition = PartiteDecomposition(
        components=tuple(tuple(sorted(c)) for c in comps),
        n_nodes=graph.n_nodes,
    )
    _check_clique_condition(graph, decomposition)
    logger.debug("[Topology] K=%d，M_k=%s", decomposition.K, decomposition.sizes)
    return decomposition


def _check_clique_condition(graph: InterferenceGraph, d: PartiteDecomposition):
    # 分量互相独立，所以一个团至多每个分量一个节点：大小为 K 的团自动横跨全部分量
    K = d.K
    covered = set()
    for clique in nx.find_cliques(graph.to_networkx()):
        if len(clique) == K:
            covered.update(clique)
    missing = [i for i in range(graph.n_nodes) if i not in covered]
    if missing:
        raise CliqueConditionError(f"以下节点不在任何大小为 K={K} 的团中", missing)


def is_complete_partite(graph: InterferenceGraph, d: PartiteDecomposition) -> bool:
    member = d.membership
    expected = sum(
        d.sizes[a] * d.sizes[b] for a in range(d.K) for b in range(a + 1, d.K)
    )
    if len(graph.edges) != expected:
        return False
    return all(member[i] != member[j] for i, j in graph.edges)


# === H(u)、ζ、Ω* ===

def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def component_counts(ss: StateSpace, d: PartiteDecomposition) -> np.ndarray:
    """(|Ω|, K) 矩阵：每个状态在每个分量里的激活节点数。"""
    onehot = np.zeros((ss.n_nodes, d.K), dtype=np.int64)
    onehot[np.arange(ss.n_nodes), d.membership] = 1
    return ss.bits.astype(np.int64) @ onehot


def h_value(u, d: PartiteDecomposition) -> float:
    """H(u) = Σ_k (1/M_k) Σ_{i∈V_k} u_i。u 可以是 ActivityState、掩码或 bit 序列。"""
    if isinstance(u, ActivityState):
        mask = u.mask
    elif isinstance(u, (int, np.integer)):
        mask = int(u)
    else:
        mask = 0
        for i, b in enumerate(u):
            if b:
                mask |= 1 << i
    total = Fraction(0)
    for comp, size in zip(d.components, d.sizes):
        active = sum(1 for i in comp if (mask >> i) & 1)
        total += Fraction(active, size)
    return float(total)


def h_values(ss: StateSpace, d: PartiteDecomposition) -> np.ndarray:
    counts = component_counts(ss, d)
    return counts @ (1.0 / np.asarray(d.sizes, dtype=float))


@dataclass(frozen=True)
class StructuralCoefficients:
    """ζ、Ω* 及 Ω∖Ω* 上 H 的最大值（同时给出精确分数）。"""

    zeta: float
    zeta_exact: Fraction
    omega_star: Tuple[int, ...]
    h_max_off_star: float
    h_max_witness: Optional[int]


def omega_star(ss: StateSpace, d: PartiteDecomposition) -> Tuple[int, ...]:
    return tuple(ss.ordinal(d.incidence_mask(k)) for k in range(d.K))


def compute_zeta(ss: StateSpace, d: PartiteDecomposition) -> StructuralCoefficients:
    """
    扫描 Ω∖Ω* 精确求 ζ = 1 - max H(u)。

    用整数算术：H(u)·L = Σ_k c_k · (L / M_k)，L = lcm(M_k)，避免浮点把 H 算成 1 ± ulp。
    """
    L = _lcm(d.sizes)
    weights = np.asarray([L // m for m in d.sizes], dtype=np.int64)
    numer = component_counts(ss, d) @ weights

    star = omega_star(ss, d)
    off = np.ones(len(ss), dtype=bool)
    off[list(star)] = False

    if not off.any():
        # 只有 Ω*（K 个单点分量且空集也算在内的情形不会出现：空集永远在 Ω∖Ω*）
        return StructuralCoefficients(1.0, Fraction(1), star, 0.0, None)

    off_idx = np.nonzero(off)[0]
    worst = int(off_idx[np.argmax(numer[off_idx])])
    h_max = Fraction(int(numer[worst]), L)
    if h_max >= 1:
        witness = ss.state(worst).bits
        raise AssumptionViolatedError("多部假设不成立：存在 Ω* 以外 H(u) ≥ 1 的状态", witness, float(h_max))
    zeta = 1 - h_max
    return StructuralCoefficients(
        zeta=float(zeta),
        zeta_exact=zeta,
        omega_star=star,
        h_max_off_star=float(h_max),
        h_max_witness=worst,
    )
