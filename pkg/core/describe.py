# core/describe.py
# -*- coding: utf-8 -*-
"""
拓扑概况：describe 子命令的文字输出。

状态空间超过上限时不报错，改为给出已枚举到的数量作为 |Ω| 的下界；
不能做多部分解的图（奇环、分量不满足团条件）只打印原因，不中断。
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from core.errors import DecompositionError, ResourceError, ValidationError
from topology.cliques import enumerate_cliques
from topology.graph import InterferenceGraph, build_topology
from topology.partite import PartiteDecomposition, compute_zeta, partite_decomposition
from topology.state_space import StateSpace, enumerate_state_space

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopologySummary:
    """omega_size_exact 为 False 时 omega_size 只是下界。"""

    graph: InterferenceGraph
    omega_size: int
    omega_size_exact: bool
    clique_census: Dict[int, int]
    decomposition: Optional[PartiteDecomposition] = None
    decomposition_error: str = ""
    zeta: Optional[Fraction] = None
    zeta_error: str = ""
    omega_star: Tuple[str, ...] = ()

    def as_dict(self) -> Dict[str, Any]:
        d = self.decomposition
        return {
            "N": self.graph.n_nodes,
            "E": len(self.graph.edges),
            "omega": self.omega_size,
            "omega_exact": self.omega_size_exact,
            "clique_census": dict(self.clique_census),
            "K": d.K if d else None,
            "M": d.M if d else None,
            "M_star": d.M_star if d else None,
            "zeta": str(self.zeta) if self.zeta is not None else None,
            "omega_star": list(self.omega_star),
        }

    def render(self) -> str:
        g = self.graph
        lines = [
            f"拓扑: {g.kind} {g.descriptor}",
            f"N = {g.n_nodes}, |E| = {len(g.edges)}",
            f"|Ω| = {self.omega_size}" if self.omega_size_exact else f"|Ω| ≥ {self.omega_size}（超过枚举上限）",
            "极大团: " + ", ".join(f"{n} 个大小 {s}" for s, n in sorted(self.clique_census.items())),
        ]
        d = self.decomposition
        if d is None:
            lines.append(f"多部分解: 无（{self.decomposition_error}）")
        else:
            comps = "; ".join("{" + ",".join(g.label(i) for i in c) + "}" for c in d.components)
            lines.append(f"多部分解: K = {d.K}, M = {d.M}, M* = {d.M_star}, 分量 {comps}")
            if self.zeta is not None:
                lines.append(f"ζ = {self.zeta}（≈ {float(self.zeta):.6g}）")
                lines.append("Ω* = " + ", ".join(self.omega_star))
            else:
                lines.append(f"ζ: 无法计算（{self.zeta_error}）")
        return "\n".join(lines)


def _clique_census(graph: InterferenceGraph) -> Dict[int, int]:
    return dict(Counter(len(c) for c in enumerate_cliques(graph)))


def summarize(graph: InterferenceGraph, components: Optional[List[List[int]]] = None) -> TopologySummary:
    ss: Optional[StateSpace] = None
    try:
        ss = enumerate_state_space(graph)
        size, exact = len(ss), True
    except ResourceError as e:
        logger.warning("[Describe] 状态空间超过上限，只给下界: %s", e)
        size, exact = int(e.estimate or e.limit), False

    try:
        d = partite_decomposition(graph, components)
        d_err = ""
    except DecompositionError as e:
        d, d_err = None, str(e)

    zeta, z_err, star = None, "", ()
    if d is not None:
        if ss is None:
            z_err = "状态空间未能完整枚举"
        else:
            try:
                coeffs = compute_zeta(ss, d)
                zeta = coeffs.zeta_exact
                star = tuple(ss.state(o).bitstring() for o in coeffs.omega_star)
            except ValidationError as e:
                z_err = str(e)

    return TopologySummary(
        graph=graph, omega_size=size, omega_size_exact=exact, clique_census=_clique_census(graph),
        decomposition=d, decomposition_error=d_err, zeta=zeta, zeta_error=z_err, omega_star=star,
    )


def describe(descriptor: Dict[str, Any], components: Optional[List[List[int]]] = None) -> str:
    return summarize(build_topology(descriptor), components).render()
