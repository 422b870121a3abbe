# bounds/diagnostics.py
# -*- coding: utf-8 -*-
"""
在精确平稳分布上逐条核对多部图下界推导里用到的中间不等式。

失败不是异常：每条检查返回两边的数值和 passed 标记；前提不满足（不稳定、ρ < ρ_γ）的检查记为 skipped。
稳定配置上出现失败，说明实现有 bug。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from core.errors import DomainError
from bounds.extension import rho_gamma
from bounds.paths import PathStructure, partite_sets
from bounds.reports import TrafficProfile
from stationary.distribution import StationaryDistribution
from stationary.stability import stability_check
from stationary.subsets import subset_analysis
from topology.partite import PartiteDecomposition, compute_zeta, is_complete_partite

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    passed: bool
    lhs: float
    rhs: float
    relation: str


@dataclass(frozen=True)
class DiagnosticReport:
    stable: bool
    rho: float
    rho_gamma: float
    zeta: float
    checks: Tuple[LemmaCheck, ...] = field(default_factory=tuple)
    skipped: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[LemmaCheck]:
        return [c for c in self.checks if not c.passed]


def _less(name: str, lhs: float, rhs: float) -> LemmaCheck:
    return LemmaCheck(name=name, passed=bool(lhs < rhs), lhs=float(lhs), rhs=float(rhs), relation="<")


def _at_least(name: str, lhs: float, rhs: float) -> LemmaCheck:
    return LemmaCheck(name=name, passed=bool(lhs >= rhs), lhs=float(lhs), rhs=float(rhs), relation=">=")


def lemma_diagnostics(
    dist: StationaryDistribution,
    d: PartiteDecomposition,
    tp: TrafficProfile,
    gamma: float,
    ps: Optional[PathStructure] = None,
) -> DiagnosticReport:
    """
    - 跨分量联合激活的时间占比：Σ_{u∉Ω*} π(u) < (1-ρ)/ζ，π(v^(k)) > ρ̂_k - (1-ρ)/ζ；
    - 分量比值接近：R_k = Π_{i∈V_k} σ_i / ρ̂_k 满足 min R ≥ (1-3γ) max R；
    - 边界权重：max_{u∈∂S_l} Π σ^u ≤ (σ*/((1-3γ)ρ_min))^{H_l}；
    - S_l 的流量与质量夹逼；
    - 完全多部图上另外核对 B_k 的流量与质量夹逼。
    ps 为空时取分量 1 的第一个节点作 S、w ≡ 1 计算路径结构。
    """
    if dist.rates is None:
        raise DomainError("诊断需要带速率的平稳分布")
    ss = dist.state_space
    sigma = np.asarray(dist.rates.sigma)
    rho = tp.rho_total
    rho_hat = np.asarray(tp.rho_hat, dtype=float)
    rho_min = tp.rho_min
    coeff = compute_zeta(ss, d)
    zeta = coeff.zeta
    r_gamma = rho_gamma(gamma, zeta, rho_min)

    verdict = stability_check(dist, tp.rho)
    if not verdict.stable:
        logger.warning("[Bounds] 配置不稳定（min θ-ρ = %.4g），跳过全部引理检查", verdict.min_margin)
        return DiagnosticReport(
            stable=False, rho=rho, rho_gamma=r_gamma, zeta=zeta,
            skipped=(("all", "unstable"),),
        )

    checks: List[LemmaCheck] = []
    skipped: List[Tuple[str, str]] = []

    # --- 跨分量联合激活 ---
    off_star = np.ones(len(ss), dtype=bool)
    off_star[list(coeff.omega_star)] = False
    slack = (1.0 - rho) / zeta
    checks.append(_less("negligible_joint_activity", float(dist.pi[off_star].sum()), slack))
    for k, v_k in enumerate(coeff.omega_star):
        checks.append(_less(f"dominant_state_mass_{k + 1}", rho_hat[k] - slack, float(dist.pi[v_k])))

    # --- 完全多部图上的 B_k 夹逼 ---
    if is_complete_partite(ss.graph, d):
        for k, comp in enumerate(d.components):
            others = float(rho_hat.sum() - rho_hat[k])
            sa = subset_analysis(dist, ss.states_with_active(comp))
            bound = d.sizes[k] * (1.0 - others) * ((1.0 - rho) / rho_hat[k]) ** (d.sizes[k] - 1)
            checks.append(_less(f"complete_flow_{k + 1}", sa.flow, bound))
            checks.append(_less(f"complete_mass_low_{k + 1}", rho_hat[k], sa.pi_mass))
            checks.append(_less(f"complete_mass_high_{k + 1}", sa.pi_mass, 1.0 - others))
            checks.append(_less(f"complete_rest_low_{k + 1}", others, 1.0 - sa.pi_mass))
            checks.append(_less(f"complete_rest_high_{k + 1}", 1.0 - sa.pi_mass, 1.0 - rho_hat[k]))

    if rho < r_gamma:
        skipped.append(("high_load", f"rho={rho:.6g} < rho_gamma={r_gamma:.6g}"))
        return DiagnosticReport(True, rho, r_gamma, zeta, tuple(checks), tuple(skipped))
    if gamma >= 1.0 / 3.0:
        skipped.append(("high_load", "gamma >= 1/3"))
        return DiagnosticReport(True, rho, r_gamma, zeta, tuple(checks), tuple(skipped))

    # --- 分量比值 ---
    log_pi_k = np.array([np.sum(np.log(sigma[list(comp)])) for comp in d.components])
    log_r = log_pi_k - np.log(rho_hat)
    checks.append(_at_least(
        "component_ratio", float(np.min(log_r)), float(math.log(1.0 - 3.0 * gamma) + np.max(log_r))
    ))

    # --- 边界权重与 S_l 夹逼 ---
    if ps is None:
        ps = partite_sets(ss, d, tp, 1.0, [d.components[0][0]], scan_min=False)
    log_sigma_star = float(np.min(log_pi_k))
    k_star = int(np.argmin(log_pi_k))
    log_weight = ss.bits.astype(float) @ np.log(sigma)
    log_base = log_sigma_star - math.log((1.0 - 3.0 * gamma) * rho_min)
    n_nodes, M = ss.n_nodes, d.M
    lower = (1.0 - gamma) * rho_min
    for l in range(d.K):
        boundary = ps.boundaries[l]
        h_l = ps.h_l[l]
        checks.append(LemmaCheck(
            name=f"boundary_weight_{l + 1}",
            passed=bool(np.max(log_weight[boundary]) <= h_l * log_base + 1e-12),
            lhs=float(np.max(log_weight[boundary])),
            rhs=float(h_l * log_base),
            relation="<= (log)",
        ))
        sa = subset_analysis(dist, ps.s_l_sets[l])
        log_rhs = (
            n_nodes * math.log(2.0) - math.log((1.0 - 3.0 * gamma) * rho_min)
            + M * (h_l - 1.0) * (math.log(rho_hat[k_star]) - math.log(1.0 - rho))
        )
        checks.append(LemmaCheck(
            name=f"set_flow_{l + 1}",
            passed=bool(math.log(sa.flow) < log_rhs),
            lhs=float(math.log(sa.flow)),
            rhs=float(log_rhs),
            relation="< (log)",
        ))
        checks.append(_less(f"set_mass_low_{l + 1}", lower, sa.pi_mass))
        checks.append(_less(f"set_mass_high_{l + 1}", sa.pi_mass, 1.0 - lower))
        checks.append(_less(f"set_rest_low_{l + 1}", lower, 1.0 - sa.pi_mass))
        checks.append(_less(f"set_rest_high_{l + 1}", 1.0 - sa.pi_mass, 1.0 - lower))

    report = DiagnosticReport(True, rho, r_gamma, zeta, tuple(checks), tuple(skipped))
    for c in report.failures():
        logger.warning("[Bounds] 引理检查失败：%s（%.6g %s %.6g）", c.name, c.lhs, c.relation, c.rhs)
    return report
