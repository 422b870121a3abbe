# bounds/extension.py
# -*- coding: utf-8 -*-
"""
一般 K 部图上的队长 / 混合时间下界。

两者都带 2^N 因子，N 稍大数值就下溢，所以全部在 log10 域计算，BoundReport 同时给出 value 和 log10_value。
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from core.errors import DomainError, InfeasibleLoadError, PreconditionError
from bounds.paths import PathStructure
from bounds.reports import BoundKind, BoundReport, Target, TrafficProfile, make_report
from topology.partite import PartiteDecomposition


def rho_gamma(gamma: float, zeta: float, rho_min: float) -> float:
    """ρ_γ = 1 - γ ζ ρ_min²。"""
    return 1.0 - gamma * zeta * rho_min ** 2


def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else float("-inf")


def _check_load(tp: TrafficProfile, gamma: float, zeta: float) -> float:
    if gamma <= 0:
        raise DomainError("γ 必须为正", gamma=gamma)
    rho = tp.rho_total
    if not (0.0 <= rho < 1.0):
        raise InfeasibleLoadError("总负载必须在 [0, 1)", rho=rho)
    required = rho_gamma(gamma, zeta, tp.rho_min)
    if rho < required:
        raise PreconditionError("负载低于 ρ_γ，下界不适用", required_rho=required, rho=rho)
    return rho


def thm4_bound(
    ps: PathStructure,
    d: PartiteDecomposition,
    tp: TrafficProfile,
    weights,
    S: Iterable[int],
    gamma: float,
    zeta: float,
) -> BoundReport:
    """
    Σ_{i∈S} w_i E[L_i] > δ(S)(1-4γ) ρ_min^{M+3} / 2^{N+1} · (1/(1-ρ))^{M(1-H*(S))}
    """
    idx = tuple(sorted({int(i) for i in S}))
    if idx != tuple(ps.node_subset):
        raise DomainError("路径结构是为另一个 S 计算的", S=list(idx), structure=list(ps.node_subset))
    if ps.delta is None:
        raise PreconditionError("δ(S) 无定义（Ω∖Δ(S) 为空）")
    rho = _check_load(tp, gamma, zeta)
    M, N = d.M, d.n_nodes
    exponent = M * (1.0 - ps.h_star)
    log10_value = (
        _log10(ps.delta) + _log10(1.0 - 4.0 * gamma) + (M + 3) * _log10(tp.rho_min)
        - (N + 1) * math.log10(2.0) - exponent * math.log10(1.0 - rho)
    )
    w = np.asarray(weights, dtype=float)
    w = np.full(d.n_nodes, float(w)) if w.ndim == 0 else w
    uniform = bool(np.all(w[list(idx)] == w[idx[0]]))
    return make_report(
        BoundKind.THM4, Target.WEIGHTED_QUEUE, log10_value=log10_value,
        witness={"S": list(idx), "h_star": ps.h_star, "delta": ps.delta},
        arrival_rate=float(tp.lam[list(idx)].sum() * w[idx[0]]) if uniform else None,
        rho=rho,
        parameters={"gamma": gamma, "zeta": zeta, "rho_gamma": rho_gamma(gamma, zeta, tp.rho_min), "exponent": exponent},
    )


def thm5_bound(
    ps: PathStructure,
    d: PartiteDecomposition,
    tp: TrafficProfile,
    gamma: float,
    epsilon: float,
    zeta: float,
) -> BoundReport:
    """
    t_mix(ε) ≥ ((1-γ)ρ_min - 2ε)(1-4γ) ρ_min^{M+2} / 2^N · (1/(1-ρ))^{M(1-H*_min)}，夹到 0。
    """
    if ps.h_star_min is None:
        raise DomainError("路径结构里没有 H*_min（partite_sets 需 scan_min=True）")
    if not (0.0 < epsilon < 0.5):
        raise DomainError("ε 必须落在 (0, 1/2)", epsilon=epsilon)
    rho = _check_load(tp, gamma, zeta)
    M, N = d.M, d.n_nodes
    rho_min = tp.rho_min
    exponent = M * (1.0 - ps.h_star_min)
    log10_value = (
        _log10((1.0 - gamma) * rho_min - 2.0 * epsilon) + _log10(1.0 - 4.0 * gamma)
        + (M + 2) * _log10(rho_min) - N * math.log10(2.0) - exponent * math.log10(1.0 - rho)
    )
    return make_report(
        BoundKind.THM5, Target.MIXING_TIME, log10_value=log10_value,
        witness={"h_star_min": ps.h_star_min, "S": list(ps.h_star_min_witness or ())},
        rho=rho,
        parameters={"gamma": gamma, "epsilon": epsilon, "zeta": zeta, "exponent": exponent},
    )
