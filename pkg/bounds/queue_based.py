# bounds/queue_based.py
# -*- coding: utf-8 -*-
"""
团负载下界与队列相关策略的下界。

- clique_load_bound：团里所有流量压到一个节点上的 M/G/1 型下界；
- activity_factor_requirement：稳定所需的 E[f]/E[g] 下限 ρ_i/(1-ρ_C)（固定速率时即 σ_i 的要求）；
- thm1_*：f 凹增 / g 凸减 / h 单调三种情形的下界，f、g 在团内共用一个族。
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, List, Sequence

import numpy as np

from core.errors import DomainError, InfeasibleLoadError, InverseError, InverseOverflowError
from bounds.rate_functions import RateFunctionFamily
from bounds.reports import BoundKind, BoundReport, Target, TrafficProfile, make_report

logger = logging.getLogger(__name__)


def _clique(tp: TrafficProfile, clique: Iterable[int]) -> List[int]:
    idx = sorted({int(i) for i in clique})
    if not idx:
        raise DomainError("团不能为空")
    if idx[0] < 0 or idx[-1] >= tp.n_nodes:
        raise DomainError("团中节点越界", clique=idx)
    _, rho_c = tp.clique_load(idx)
    if rho_c >= 1.0:
        raise InfeasibleLoadError("团负载 ρ_C ≥ 1，不可能稳定", rho_c=rho_c, clique=idx)
    return idx


def _unbounded_inverse(fn, arg: float, name: str) -> float:
    """反函数在数值上限内够不到：下界按 +∞ 报告。"""
    try:
        return fn(arg)
    except InverseOverflowError as e:
        logger.warning("[Bounds] %s 参数 %.4g 的反函数超过数值上限，下界记为 +∞: %s", name, arg, e)
        return math.inf


def _queue_term(tp: TrafficProfile, idx: List[int]) -> float:
    lam_c, rho_c = tp.clique_load(idx)
    return lam_c * float(np.sum(tp.lam[idx] / tp.mu[idx] ** 2)) / (1.0 - rho_c)


def clique_load_bound(tp: TrafficProfile, clique: Iterable[int]) -> BoundReport:
    """λ_C Σ_{i∈C}(λ_i/μ_i²)/(1-ρ_C) + ρ_C。"""
    idx = _clique(tp, clique)
    lam_c, rho_c = tp.clique_load(idx)
    value = _queue_term(tp, idx) + rho_c
    return make_report(
        BoundKind.EQ2, Target.AGGREGATE_QUEUE, value=value,
        witness={"clique": idx}, arrival_rate=lam_c, rho=rho_c,
    )


def activity_factor_requirement(tp: TrafficProfile, clique: Iterable[int], node: int) -> float:
    """ρ_i / (1 - ρ_C)。"""
    idx = _clique(tp, clique)
    if int(node) not in idx:
        raise DomainError("节点不在团内", node=node, clique=idx)
    _, rho_c = tp.clique_load(idx)
    return float(tp.rho[int(node)] / (1.0 - rho_c))


def thm1_concave_f(
    tp: TrafficProfile,
    clique: Iterable[int],
    family: RateFunctionFamily,
    xi: Sequence[float],
) -> BoundReport:
    """
    f 凹增、g_i ≥ ξ_i > 0：
        λ_C Σ λ_i/μ_i² /(1-ρ_C) + |C| f^{-1}((1/|C|) Σ ρ_i ξ_i /(1-ρ_C)) + ρ_C
    """
    idx = _clique(tp, clique)
    family.require_concave_increasing_f()
    xi_v = _xi(xi, idx, tp.n_nodes)
    if np.any(xi_v <= 0):
        raise DomainError("去激活下限 ξ_i 必须为正")
    lam_c, rho_c = tp.clique_load(idx)
    size = len(idx)
    arg = float(np.sum(tp.rho[idx] * xi_v)) / (1.0 - rho_c) / size
    value = _queue_term(tp, idx) + size * _unbounded_inverse(family.f_inverse, arg, "Thm1(i)") + rho_c
    return make_report(
        BoundKind.THM1I, Target.AGGREGATE_QUEUE, value=value,
        witness={"clique": idx, "xi": xi_v.tolist()}, arrival_rate=lam_c, rho=rho_c,
        parameters={"family": family.describe()},
    )


def thm1_convex_g(
    tp: TrafficProfile,
    clique: Iterable[int],
    family: RateFunctionFamily,
    xi: Sequence[float],
) -> BoundReport:
    """
    g 凸减、f_i ≤ ξ_i：Σ ρ_i E[L_i] ≥ ρ_C g^{-1}((1-ρ_C) Σ ξ_i / ρ_C)。
    参数大于 g(0) 时下界为空（value = 0，vacuous）；
    参数小于 g 在数值上限处的值时解比上限还大，下界为 +∞。
    """
    idx = _clique(tp, clique)
    family.require_convex_decreasing_g()
    xi_v = _xi(xi, idx, tp.n_nodes)
    lam_c, rho_c = tp.clique_load(idx)
    witness = {"clique": idx, "xi": xi_v.tolist()}
    params = {"family": family.describe()}
    if rho_c <= 0:
        return make_report(BoundKind.THM1II, Target.WEIGHTED_QUEUE, value=0.0, witness=witness, rho=rho_c, parameters=params)
    arg = (1.0 - rho_c) * float(np.sum(xi_v)) / rho_c
    try:
        value = rho_c * _unbounded_inverse(family.g_inverse, arg, "Thm1(ii)")
    except InverseError as e:
        logger.warning("[Bounds] Thm1(ii) 参数 %.4g 超出 g 的值域，下界为空: %s", arg, e)
        value = 0.0
    return make_report(BoundKind.THM1II, Target.WEIGHTED_QUEUE, value=value, witness=witness, rho=rho_c, parameters=params)


def thm1_h_bound(tp: TrafficProfile, clique: Iterable[int], family: RateFunctionFamily) -> BoundReport:
    """h^{-1}(ρ_C / (|C|(1-ρ_C)))：团内每个节点平均队长的量级。"""
    idx = _clique(tp, clique)
    family.require_concave_increasing_f()
    family.require_convex_decreasing_g()
    family.require_increasing_h()
    lam_c, rho_c = tp.clique_load(idx)
    arg = rho_c / (len(idx) * (1.0 - rho_c))
    value = _unbounded_inverse(family.h_inverse, arg, "Thm1(iii)")
    return make_report(
        BoundKind.THM1III, Target.PER_NODE_QUEUE, value=value,
        witness={"clique": idx}, arrival_rate=lam_c / len(idx), rho=rho_c,
        parameters={"family": family.describe()},
    )


def thm1_h_cover_total(
    tp: TrafficProfile,
    cover: Sequence[Iterable[int]],
    family: RateFunctionFamily,
) -> BoundReport:
    """不相交团覆盖上逐团求 thm1_h_bound，按团大小加总成全网队长的下界。"""
    total = 0.0
    cliques = []
    for clique in cover:
        idx = sorted(int(i) for i in clique)
        total += len(idx) * thm1_h_bound(tp, idx, family).value
        cliques.append(idx)
    return make_report(
        BoundKind.THM1III, Target.AGGREGATE_QUEUE, value=total,
        witness={"cover": cliques}, arrival_rate=float(tp.lam.sum()),
        parameters={"family": family.describe(), "aggregation": "clique_cover"},
    )


def _xi(xi: Sequence[float], idx: List[int], n_nodes: int) -> np.ndarray:
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 0:
        return np.full(len(idx), float(arr))
    if arr.shape == (n_nodes,):
        return arr[idx]
    if arr.shape == (len(idx),):
        return arr
    raise DomainError("ξ 的长度必须是 1、|C| 或 N", got=arr.shape)
