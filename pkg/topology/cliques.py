# topology/cliques.py
# -*- coding: utf-8 -*-

from __future__ import annotations

from typing import FrozenSet, List, Optional

import networkx as nx

from topology.graph import InterferenceGraph


def _ordered(cliques) -> List[FrozenSet[int]]:
    return sorted((frozenset(c) for c in cliques), key=lambda c: (len(c), sorted(c)))


def enumerate_cliques(graph: InterferenceGraph, size: Optional[int] = None) -> List[FrozenSet[int]]:
    """
    size 为空：返回全部极大团；
    size 给定：返回全部大小恰为 size 的团（不要求极大）。
    """
    g = graph.to_networkx()
    if size is None:
        return _ordered(nx.find_cliques(g))
    if size < 1:
        return []
    out = []
    # enumerate_all_cliques 按大小递增产出
    for c in nx.enumerate_all_cliques(g):
        if len(c) == size:
            out.append(c)
        elif len(c) > size:
            break
    return _ordered(out)


def clique_cover(graph: InterferenceGraph) -> List[FrozenSet[int]]:
    """贪心的不相交团覆盖：先挑大的极大团，剩下的节点各自成团。"""
    covered = set()
    cover: List[FrozenSet[int]] = []
    for c in sorted(enumerate_cliques(graph), key=lambda c: (-len(c), sorted(c))):
        if covered.isdisjoint(c):
            cover.append(c)
            covered |= c
    for i in range(graph.n_nodes):
        if i not in covered:
            cover.append(frozenset([i]))
    return cover


def is_clique(graph: InterferenceGraph, nodes) -> bool:
    nodes = sorted(nodes)
    return all(graph.has_edge(a, b) for k, a in enumerate(nodes) for b in nodes[k + 1:])
