# bounds/partite_bounds.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
import math
from typing import Iterable, Optional

import numpy as np

from core.errors import DomainError, InfeasibleLoadError, WrongTopologyError
from bounds.reports import BoundKind, BoundReport, Target, TrafficProfile, make_report
from topology.graph import InterferenceGraph
from topology.partite import PartiteDecomposition, is_complete_partite

logger = logging.getLogger(__name__)


def _require_complete(graph: Optional[InterferenceGraph], d: PartiteDecomposition):
    if graph is not None and not is_complete_partite(graph, d):
        raise WrongTopologyError("该下界只对完全多部图成立", kind=graph.kind)


def _log10_heavy(rho: float, exponent: float) -> float:
    """log10 (1/(1-ρ))^exponent。"""
    if not (0.0 <= rho < 1.0):
        raise InfeasibleLoadError("总负载必须在 [0, 1)", rho=rho)
    return -exponent * math.log10(1.0 - rho)


def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else float("-inf")


def thm2_bound(
    d: PartiteDecomposition,
    tp: TrafficProfile,
    weights,
    S: Iterable[int],
    graph: Optional[InterferenceGraph] = None,
) -> BoundReport:
    """
    完全多部图、任意稳定的固定速率：
        Σ_{i∈S} w_i E[L_i] ≥ (1/(2M)) ρ_min^{M+1} Σ_{i∈S} w_i λ_i (1/(1-ρ))^{M-1}
    """
    _require_complete(graph, d)
    idx = sorted({int(i) for i in S})
    comps = {d.component_of(i) for i in idx}
    if len(comps) != 1:
        raise DomainError("S 必须落在同一个分量内", S=idx)
    w = np.asarray(weights, dtype=float)
    w = np.full(d.n_nodes, float(w)) if w.ndim == 0 else w
    M = d.M
    rho, rho_min = tp.rho_total, tp.rho_min
    demand = float(np.sum(w[idx] * tp.lam[idx]))
    log10_value = (
        _log10(1.0 / (2 * M)) + (M + 1) * _log10(rho_min) + _log10(demand) + _log10_heavy(rho, M - 1)
    )
    uniform = bool(np.all(w[idx] == w[idx][0]))
    return make_report(
        BoundKind.THM2, Target.WEIGHTED_QUEUE, log10_value=log10_value,
        witness={"S": idx, "component": comps.pop() + 1},
        arrival_rate=float(tp.lam[idx].sum() * w[idx][0]) if uniform else None,
        rho=rho, parameters={"M": M, "rho_min": rho_min, "form": "general"},
    )


def thm2_symmetric_bound(d: PartiteDecomposition, rho: float, graph: Optional[InterferenceGraph] = None) -> BoundReport:
    """
    对称情形（M_k ≡ M，ρ̂_k ≡ ρ/K），每个节点：
        (K-1)² ρ^{M+2} / (2 M K^{M+1} (K - (K-1)ρ)) · (1/(1-ρ))^{M-1}
    """
    _require_complete(graph, d)
    if len(set(d.sizes)) != 1:
        raise WrongTopologyError("对称形式要求所有分量大小相同", sizes=d.sizes)
    K, M = d.K, d.M
    if K < 2:
        log10_value = float("-inf")
    else:
        log10_value = (
            2 * math.log10(K - 1) + (M + 2) * _log10(rho)
            - math.log10(2 * M) - (M + 1) * math.log10(K) - math.log10(K - (K - 1) * rho)
            + _log10_heavy(rho, M - 1)
        )
    return make_report(
        BoundKind.THM2, Target.PER_NODE_QUEUE, log10_value=log10_value,
        arrival_rate=rho / K if rho > 0 else None, rho=rho,
        parameters={"K": K, "M": M, "form": "symmetric"},
    )


def thm3_bound(
    d: PartiteDecomposition,
    tp: TrafficProfile,
    epsilon: float,
    graph: Optional[InterferenceGraph] = None,
) -> BoundReport:
    """t_mix(ε) ≥ ((K-1)ρ_min - 2ε)(ρ_min^M / M)(1/(1-ρ))^{M-1}，夹到 0。"""
    _require_complete(graph, d)
    if not (0.0 < epsilon < 0.5):
        raise DomainError("ε 必须落在 (0, 1/2)", epsilon=epsilon)
    K, M = d.K, d.M
    rho, rho_min = tp.rho_total, tp.rho_min
    lead = (K - 1) * rho_min - 2.0 * epsilon
    if lead <= 0:
        logger.debug("[Bounds] Thm3：ε=%.3g ≥ (K-1)ρ_min/2，下界为空", epsilon)
    log10_value = _log10(lead) + M * _log10(rho_min) - math.log10(M) + _log10_heavy(rho, M - 1)
    return make_report(
        BoundKind.THM3, Target.MIXING_TIME, log10_value=log10_value, rho=rho,
        parameters={"K": K, "M": M, "rho_min": rho_min, "epsilon": epsilon},
    )
