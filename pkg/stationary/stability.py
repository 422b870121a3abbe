# stationary/stability.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from core.errors import DomainError, SolverError
from topology.state_space import StateSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    margins: tuple
    min_margin: float


@dataclass(frozen=True)
class InteriorVerdict:
    """interior = (δ* > 0)；weights 为 LP 最优解里各极大独立集的权重。"""

    interior: bool
    margin: float
    columns: tuple
    weights: tuple


def _check_loads(loads: Sequence[float], n_nodes: int) -> np.ndarray:
    rho = np.asarray(loads, dtype=float)
    if rho.shape != (n_nodes,):
        raise DomainError("负载向量长度和节点数不一致", expected=n_nodes, got=rho.shape)
    if np.any(rho < 0) or np.any(rho >= 1):
        raise DomainError("每个节点的负载必须在 [0, 1)", loads=rho.tolist())
    return rho


def stability_check(dist, loads: Sequence[float]) -> StabilityVerdict:
    """固定速率下稳定 ⇔ 所有 ρ_i < θ_i；返回逐点余量 θ_i - ρ_i。"""
    rho = _check_loads(loads, dist.state_space.n_nodes)
    margins = np.asarray(dist.theta) - rho
    stable = bool(np.all(margins > 0))
    return StabilityVerdict(stable=stable, margins=tuple(float(m) for m in margins), min_margin=float(margins.min()))


def maximal_independent_sets(ss: StateSpace) -> List[int]:
    """极大独立集 = 补图的极大团，返回位掩码（升序）。"""
    comp = nx.complement(ss.graph.to_networkx())
    masks = []
    for clique in nx.find_cliques(comp):
        mask = 0
        for i in clique:
            mask |= 1 << int(i)
        masks.append(mask)
    return sorted(masks)


def interior_check(ss: StateSpace, loads: Sequence[float]) -> InteriorVerdict:
    """
    解 max δ  s.t.  Σ_j α_j m_j ≥ ρ + δ，Σ α_j = 1，α ≥ 0。

    Ω 向下封闭，所以列只需要极大独立集 m_j：任何凸组合都被它们的凸组合逐点支配。
    """
    rho = _check_loads(loads, ss.n_nodes)
    columns = maximal_independent_sets(ss)
    n, m = ss.n_nodes, len(columns)
    incidence = np.array([[(mask >> i) & 1 for mask in columns] for i in range(n)], dtype=float)

    # 变量 x = (α_1..α_m, δ)，最小化 -δ
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-incidence, np.ones((n, 1))])
    b_ub = -rho
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    bounds = [(0.0, None)] * m + [(None, 1.0)]

    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError("内点检查的 LP 没有收敛", status=res.status, reason=res.message)

    delta = float(res.x[-1])
    logger.debug("[Stationary] 内点 LP：%d 列，δ* = %.6g", m, delta)
    return InteriorVerdict(
        interior=delta > 1e-12,
        margin=delta,
        columns=tuple(columns),
        weights=tuple(float(a) for a in res.x[:m]),
    )
