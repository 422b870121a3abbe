# stationary/mixing.py
# -*- coding: utf-8 -*-
"""
精确的总变差混合时间。

d(t) = max_x ‖P_x(U(t) ∈ ·) - π‖_TV，t_mix(ε) = inf{t : d(t) ≤ ε}。

做法：
    1. 均匀化：Λ = 最大出速率，P = I + Q/Λ，T(t) = Σ_k Pois(k; Λt) P^k，Poisson 尾部截断到 1e-12；
    2. 从 t0 = 1/Λ 开始平方倍增 T(2t) = T(t)²，直到 d ≤ ε；
    3. 在最后一段 [t/2, t] 上二分，T(lo + w) = T(lo)·T(w)，相对精度 1%。
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from core import settings
from core.errors import DomainError, NumericRangeError, ResourceError
from stationary.distribution import product_form
from stationary.generator import build_generator
from stationary.rates import FixedRates
from topology.state_space import StateSpace

logger = logging.getLogger(__name__)

# 平方倍增的次数上限：t 最多到 2^200 / Λ
MAX_DOUBLINGS = 200
# 二分阶段缓存的 T(t0·2^e) 个数
POWER_CACHE = 8


@dataclass(frozen=True)
class MixingProfile:
    epsilon: float
    t_mix: float
    d_curve: Tuple[Tuple[float, float], ...]
    uniformization_rate: float

    @property
    def lower_bracket(self) -> float:
        """最后一个 d(t) > ε 的采样时刻。"""
        below = [t for t, d in self.d_curve if d > self.epsilon]
        return max(below) if below else 0.0


def _uniformized(P: sparse.csr_matrix, mean: float, tail: float) -> np.ndarray:
    """T = Σ_k Pois(k; mean) P^k（稠密），截断使丢掉的 Poisson 质量 < tail。"""
    n = P.shape[0]
    k_max = int(poisson.isf(tail, mean)) + 1
    weights = poisson.pmf(np.arange(k_max + 1), mean)
    out = np.zeros((n, n))
    power = np.eye(n)
    for k, w in enumerate(weights):
        if w > 0:
            out += w * power
        if k < k_max:
            power = np.asarray(power @ P)
    out /= weights.sum()
    return out


def _distance(T: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.max(np.abs(T - pi[None, :]).sum(axis=1)))


def mixing_time(ss: StateSpace, rates: FixedRates, epsilon: float) -> MixingProfile:
    if not (0.0 < epsilon < 0.5):
        raise DomainError("ε 必须落在 (0, 1/2)", epsilon=epsilon)
    limit = settings.cap("exact_mixing")
    if len(ss) > limit:
        raise ResourceError("状态空间超过精确混合时间上限", cap="exact_mixing", limit=limit, estimate=len(ss))

    tail = settings.tolerance("poisson_tail")
    rel = settings.tolerance("mixing_rel")
    pi = np.asarray(product_form(ss, rates).pi)

    Q = build_generator(ss, rates)
    lam = float(np.max(-Q.diagonal()))
    n = len(ss)
    P = (sparse.identity(n, format="csr") + Q / lam).tocsr()
    t0 = 1.0 / lam

    curve: Dict[float, float] = {}
    powers: "OrderedDict[int, np.ndarray]" = OrderedDict()

    def step_matrix(exponent: int) -> np.ndarray:
        # T(t0 · 2^exponent)；负指数或已被挤出缓存时直接均匀化
        if exponent in powers:
            return powers[exponent]
        return _uniformized(P, lam * t0 * 2.0 ** exponent, tail)

    # --- 倍增阶段 ---
    T = _uniformized(P, 1.0, tail)
    exponent = 0
    d = _distance(T, pi)
    curve[t0] = d
    powers[0] = T
    while d > epsilon:
        exponent += 1
        if exponent > MAX_DOUBLINGS:
            raise NumericRangeError("混合时间超出可计算范围", doublings=exponent)
        T = T @ T
        d = _distance(T, pi)
        curve[t0 * 2.0 ** exponent] = d
        powers[exponent] = T
        while len(powers) > POWER_CACHE:
            powers.popitem(last=False)

    # --- 二分阶段：lo 处 d > ε，hi 处 d ≤ ε ---
    hi = t0 * 2.0 ** exponent
    if exponent == 0:
        lo, T_lo = 0.0, np.eye(n)
    else:
        lo, T_lo = hi / 2.0, powers[exponent - 1]
    half_exp = max(exponent - 1, 0)
    while hi - lo > rel * hi:
        half_exp -= 1
        mid = lo + t0 * 2.0 ** half_exp
        T_mid = T_lo @ step_matrix(half_exp)
        d_mid = _distance(T_mid, pi)
        curve[mid] = d_mid
        if d_mid <= epsilon:
            hi = mid
        else:
            lo, T_lo = mid, T_mid

    logger.debug("[Stationary] t_mix(%.3g) = %.6g（Λ=%.4g，倍增 %d 次）", epsilon, hi, lam, exponent)
    return MixingProfile(
        epsilon=float(epsilon),
        t_mix=float(hi),
        d_curve=tuple(sorted((float(t), float(v)) for t, v in curve.items())),
        uniformization_rate=lam,
    )
