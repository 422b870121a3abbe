# stationary/distribution.py
# -*- coding: utf-8 -*-
"""
活动过程的平稳分布。

- product_form：乘积形式 π(u) = Z^{-1} Π σ_i^{u_i}，全程在对数域计算；
- exact_stationary_solve：直接解全局平衡方程 πQ = 0，只当作 product_form 的对照；
- 完全多部图的闭式 Υ_k / Z，以及按目标 θ 反求 σ 的拟合。
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize
from scipy.sparse import linalg as splinalg
from scipy.special import logsumexp

from core import settings
from core.errors import (
    DomainError,
    InfeasibleLoadError,
    NumericRangeError,
    SolverError,
    WrongTopologyError,
)
from stationary.generator import build_generator, transition_rates
from stationary.rates import FixedRates
from topology.partite import PartiteDecomposition
from topology.state_space import StateSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Ω 上的平稳分布 π、归一化常数 Z（同时保存 log Z）和每个节点的激活比例 θ。"""

    state_space: StateSpace
    pi: np.ndarray
    log_z: float
    theta: np.ndarray
    rates: Optional[FixedRates] = None

    @property
    def z(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_z))

    def mass(self, subset) -> float:
        return float(self.pi[self.state_space.indicator(subset)].sum())

    def probability(self, state) -> float:
        return float(self.pi[self.state_space.ordinal(state)])

    def detailed_balance_gap(self) -> float:
        """全部激活边上 |π(u)q(u,u+e_i) - π(u+e_i)q(u+e_i,u)| 的最大相对误差。"""
        if self.rates is None:
            raise DomainError("没有速率信息，无法检查细致平衡")
        src, dst, rate = transition_rates(self.state_space, self.rates)
        forward = self.pi[src] * rate
        # transitions() 先放激活再放去激活，两半一一对应
        half = len(src) // 2
        a, b = forward[:half], forward[half:]
        scale = np.maximum(np.maximum(a, b), np.finfo(float).tiny)
        return float(np.max(np.abs(a - b) / scale)) if half else 0.0

    def rows(self) -> List[Tuple[str, float]]:
        ss = self.state_space
        return [(ss.state(k).bitstring(), float(self.pi[k])) for k in range(len(ss))]

    def export_csv(self, path: str):
        """写 `state_bits,pi`。"""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["state_bits", "pi"])
            for bits, p in self.rows():
                writer.writerow([bits, repr(p)])


def product_form(ss: StateSpace, rates: FixedRates) -> StationaryDistribution:
    """π(u) ∝ Π σ_i^{u_i}；log Z 用 logsumexp，重负载（σ ~ 1/(1-ρ)）也不溢出。"""
    if rates.n_nodes != ss.n_nodes:
        raise DomainError("速率向量长度和节点数不一致", rates=rates.n_nodes, nodes=ss.n_nodes)
    log_sigma = np.log(rates.sigma)
    log_w = ss.bits.astype(float) @ log_sigma
    log_z = float(logsumexp(log_w))
    if not np.isfinite(log_z):
        raise NumericRangeError("log Z 不是有限数，σ 超出可表示范围", log_z=log_z)
    pi = np.exp(log_w - log_z)
    theta = pi @ ss.bits
    pi.setflags(write=False)
    theta.setflags(write=False)
    return StationaryDistribution(state_space=ss, pi=pi, log_z=log_z, theta=theta, rates=rates)


def exact_stationary_solve(ss: StateSpace, rates: FixedRates) -> StationaryDistribution:
    """
    直接构造生成元，解 πQ = 0、Σπ = 1（最后一个方程换成归一化约束）。
    |Ω| 不超过 dense_solve 上限时走稠密 LU，否则走稀疏直接法。
    """
    Q = build_generator(ss, rates)
    n = len(ss)
    A = Q.T.tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[n - 1] = 1.0

    try:
        if n <= settings.cap("dense_solve"):
            pi = linalg.solve(A.toarray(), b)
        else:
            logger.info("[Stationary] |Ω|=%d 超过稠密上限，改用稀疏求解", n)
            pi = splinalg.spsolve(A.tocsc(), b)
    except (linalg.LinAlgError, RuntimeError) as e:
        raise SolverError("全局平衡方程求解失败", reason=str(e))

    pi = np.asarray(pi, dtype=float)
    if not np.all(np.isfinite(pi)):
        raise SolverError("平衡方程解含非有限值")
    tol = settings.tolerance("solver_residual")
    if pi.min() < -tol:
        raise SolverError("平衡方程解出现负概率", min_pi=float(pi.min()))
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    residual = float(np.max(np.abs(Q.T @ pi)))
    if residual > tol * max(1.0, rates.max_rate):
        raise SolverError("平衡方程残差超过容差", residual=residual, tol=tol)

    theta = pi @ ss.bits
    log_z = float(-np.log(pi[ss.empty_ordinal])) if pi[ss.empty_ordinal] > 0 else float("inf")
    pi.setflags(write=False)
    return StationaryDistribution(state_space=ss, pi=pi, log_z=log_z, theta=theta, rates=rates)


# === 完全多部图的闭式量 ===

def upsilon(d: PartiteDecomposition, sigma: Sequence[float]) -> np.ndarray:
    """Υ_k = Π_{i∈V_k}(1+σ_i) - 1。"""
    sig = np.asarray(sigma, dtype=float)
    return np.array([np.expm1(np.sum(np.log1p(sig[list(comp)]))) for comp in d.components])


def complete_partite_normalizer(d: PartiteDecomposition, sigma: Sequence[float]) -> float:
    """完全多部图上 Z = 1 + Σ_k Υ_k。"""
    return float(1.0 + upsilon(d, sigma).sum())


def symmetric_partite_sigma(d: PartiteDecomposition, theta: float) -> float:
    """
    对称完全多部图（M_k ≡ M）上求公共 σ，使每个节点的 θ_i 等于给定值。
    θ(σ) = σ(1+σ)^{M-1} / (1 + K((1+σ)^M - 1))，在 (0, 1/K) 上单调。
    """
    if len(set(d.sizes)) != 1:
        raise WrongTopologyError("对称 σ 只对分量大小相同的完全多部图定义", sizes=d.sizes)
    K, M = d.K, d.M
    if not (0.0 < theta < 1.0 / K):
        raise InfeasibleLoadError("目标 θ 必须落在 (0, 1/K)", theta=theta, K=K)

    def log_theta(log_s: float) -> float:
        log1p_s = np.logaddexp(0.0, log_s)
        log_upsilon = M * log1p_s + np.log(-np.expm1(-M * log1p_s))
        log_z = np.logaddexp(0.0, np.log(K) + log_upsilon)
        return log_s + (M - 1) * log1p_s - log_z

    target = np.log(theta)
    lo, hi = -60.0, 1.0
    while log_theta(hi) < target:
        hi *= 2.0
        if hi > 700.0:
            raise NumericRangeError("σ 超出可表示范围", theta=theta)
    log_s = optimize.brentq(lambda x: log_theta(x) - target, lo, hi, xtol=1e-14, rtol=1e-14)
    return float(np.exp(log_s))


def fit_activity_factors(
    ss: StateSpace,
    target_theta: Sequence[float],
    mu_deact: float = 1.0,
) -> FixedRates:
    """
    反求 σ 使 θ(σ) = target。

    r = log σ 上最小化凸函数 log Z(r) - r·θ*（梯度恰为 θ(r) - θ*），
    目标在 conv(Ω) 内部时解唯一。
    """
    from stationary.stability import interior_check

    target = np.asarray(target_theta, dtype=float)
    if target.shape != (ss.n_nodes,):
        raise DomainError("目标 θ 长度和节点数不一致")
    if np.any(target <= 0):
        raise DomainError("目标 θ 必须全部为正")
    verdict = interior_check(ss, target)
    if not verdict.interior:
        raise InfeasibleLoadError("目标 θ 不在 conv(Ω) 内部", margin=verdict.margin)

    bits = ss.bits.astype(float)

    def objective(r: np.ndarray):
        log_w = bits @ r
        log_z = logsumexp(log_w)
        p = np.exp(log_w - log_z)
        return log_z - r @ target, p @ bits - target

    res = optimize.minimize(
        objective, np.zeros(ss.n_nodes), jac=True, method="L-BFGS-B",
        options={"maxiter": 5000, "gtol": 1e-12, "ftol": 1e-15},
    )
    gap = float(np.max(np.abs(objective(res.x)[1])))
    if gap > 1e-7:
        raise SolverError("σ 拟合没有收敛", gap=gap, reason=str(res.message))
    logger.debug("[Stationary] σ 拟合完成：迭代 %d 次，|θ-θ*|=%.2e", res.nit, gap)
    return FixedRates.from_sigma(np.exp(res.x), mu_deact=mu_deact)
