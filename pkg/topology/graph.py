# topology/graph.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx

from core.errors import InvalidDescriptorError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

SUPPORTED_KINDS = ("complete_partite", "grid", "line", "ring", "star", "explicit")


@dataclass(frozen=True)
class InterferenceGraph:
    """
    干扰图 G = (V, E)。

    - 节点固定编号 0..n_nodes-1，边存成 (i, j)、i < j 的无向对；
    - descriptor 保留构造参数（kind / sizes / rows ...），
      partite_decomposition 用它选择网格的奇偶着色、完全多部图的分量。
    """

    n_nodes: int
    edges: FrozenSet[Edge]
    labels: Optional[Tuple[str, ...]] = None
    descriptor: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise InvalidDescriptorError("干扰图不允许自环", node=i)
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise InvalidDescriptorError("边的端点越界", edge=(i, j), n_nodes=self.n_nodes)
            if i > j:
                raise InvalidDescriptorError("边必须按 (小, 大) 存储", edge=(i, j))
        if self.labels is not None and len(self.labels) != self.n_nodes:
            raise InvalidDescriptorError("labels 数量和节点数不一致")

    @property
    def kind(self) -> str:
        return self.descriptor.get("kind", "explicit")

    def has_edge(self, i: int, j: int) -> bool:
        a, b = (i, j) if i < j else (j, i)
        return (a, b) in self.edges

    def neighbors(self, i: int) -> List[int]:
        return sorted({b if a == i else a for a, b in self.edges if i in (a, b)})

    def neighbor_masks(self) -> List[int]:
        """每个节点的邻居位掩码（bit i 对应节点 i）。"""
        masks = [0] * self.n_nodes
        for i, j in self.edges:
            masks[i] |= 1 << j
            masks[j] |= 1 << i
        return masks

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(self.edges)
        return g

    def export_adjacency(self) -> str:
        """邻接表文本：每行 `id: neighbor,neighbor,...`。"""
        lines = []
        for i in range(self.n_nodes):
            nbrs = ",".join(str(j) for j in self.neighbors(i))
            lines.append(f"{i}: {nbrs}")
        return "\n".join(lines) + "\n"


def _canonical_edges(pairs: Iterable[Tuple[int, int]]) -> FrozenSet[Edge]:
    out = set()
    for a, b in pairs:
        a, b = int(a), int(b)
        out.add((a, b) if a < b else (b, a))
    return frozenset(out)


def _require_positive(descriptor: Dict[str, Any], key: str, minimum: int = 1) -> int:
    if key not in descriptor:
        raise InvalidDescriptorError(f"拓扑描述缺少字段 {key}", kind=descriptor.get("kind"))
    try:
        value = int(descriptor[key])
    except (TypeError, ValueError):
        raise InvalidDescriptorError(f"字段 {key} 必须是整数", value=descriptor[key])
    if value < minimum:
        raise InvalidDescriptorError(f"字段 {key} 至少为 {minimum}", value=value)
    return value


def build_topology(descriptor: Dict[str, Any]) -> InterferenceGraph:
    """
    按描述符构造干扰图。

    支持：
        complete_partite(sizes)、grid(rows, cols, wrap)、line(n)、ring(n)、
        star(leaves)、explicit(n_nodes, edges)
    """
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise InvalidDescriptorError("拓扑描述必须是带 kind 字段的映射")
    kind = descriptor["kind"]
    user_labels = descriptor.get("labels")
    labels: Optional[Tuple[str, ...]] = None

    if kind == "complete_partite":
        sizes = list(descriptor.get("sizes") or [])
        if not sizes:
            raise InvalidDescriptorError("complete_partite 的 sizes 不能为空")
        if any(int(s) < 1 for s in sizes):
            raise InvalidDescriptorError("complete_partite 的每个分量至少 1 个节点", sizes=sizes)
        sizes = [int(s) for s in sizes]
        g = nx.complete_multipartite_graph(*sizes)
        n = sum(sizes)
        edges = _canonical_edges(g.edges())
        descriptor = {"kind": kind, "sizes": sizes}

    elif kind == "grid":
        rows = _require_positive(descriptor, "rows")
        cols = _require_positive(descriptor, "cols")
        wrap = bool(descriptor.get("wrap", False))
        g = nx.grid_2d_graph(rows, cols, periodic=wrap)
        n = rows * cols
        # (r, c) → r * cols + c，按行优先编号
        edges = _canonical_edges(
            (r1 * cols + c1, r2 * cols + c2) for (r1, c1), (r2, c2) in g.edges() if (r1, c1) != (r2, c2)
        )
        labels = tuple(f"({r},{c})" for r in range(rows) for c in range(cols))
        descriptor = {"kind": kind, "rows": rows, "cols": cols, "wrap": wrap}

    elif kind == "line":
        n = _require_positive(descriptor, "n")
        edges = _canonical_edges(nx.path_graph(n).edges())
        descriptor = {"kind": kind, "n": n}

    elif kind == "ring":
        n = _require_positive(descriptor, "n", minimum=3)
        edges = _canonical_edges(nx.cycle_graph(n).edges())
        descriptor = {"kind": kind, "n": n}

    elif kind == "star":
        leaves = _require_positive(descriptor, "leaves")
        # 节点 0 是中心
        edges = _canonical_edges(nx.star_graph(leaves).edges())
        n = leaves + 1
        descriptor = {"kind": kind, "leaves": leaves}

    elif kind == "explicit":
        n = _require_positive(descriptor, "n_nodes")
        raw = descriptor.get("edges") or []
        try:
            pairs = [(int(e[0]), int(e[1])) for e in raw]
        except (TypeError, ValueError, IndexError):
            raise InvalidDescriptorError("explicit 的 edges 必须是 [i, j] 列表")
        for a, b in pairs:
            if a == b:
                raise InvalidDescriptorError("干扰图不允许自环", node=a)
        edges = _canonical_edges(pairs)
        descriptor = {"kind": kind, "n_nodes": n, "edges": sorted(edges)}

    else:
        raise InvalidDescriptorError(f"未知的拓扑类型 {kind}", supported=SUPPORTED_KINDS)

    if kind != "grid" and user_labels:
        labels = tuple(str(x) for x in user_labels)

    graph = InterferenceGraph(n_nodes=n, edges=edges, labels=labels, descriptor=descriptor)
    logger.debug("[Topology] 构造 %s：N=%d，|E|=%d", kind, graph.n_nodes, len(graph.edges))
    return graph
