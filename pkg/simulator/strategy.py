# simulator/strategy.py
# -*- coding: utf-8 -*-
"""
仿真用的接入策略。

- fixed：激活速率 ν、去激活速率 μψ 都是常数，和队长无关；
- queue_based：激活速率 f(L)、去激活速率 g(L)，直接取速率函数族的值（f 可以无界）；
  另有概率形式 from_probabilities：f = ν·φ(L)、g = μ·ψ(L)，要求 φ, ψ ∈ [0, 1]。

激活节点的服务完成速率恒为 μ_i，其中 g(L) 部分完成后去激活，μ - g(L) 部分背靠背继续。
dummy_packets 打开时，空队列节点也能激活并发送 dummy 包（φ(0) > 0 的约定）。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from bounds.rate_functions import RateFunctionFamily, probe_grid
from bounds.reports import TrafficProfile
from core.errors import ContractError, DomainError
from stationary.rates import FixedRates

logger = logging.getLogger(__name__)

STRATEGY_KINDS = ("fixed", "queue_based")


@dataclass(frozen=True)
class Strategy:
    """
    rules 长度为 1 时所有节点共用，否则逐节点给出。
    f_scale / g_scale 只在概率形式下不为 1。
    """

    kind: str
    rules: Tuple[RateFunctionFamily, ...]
    f_scale: float = 1.0
    g_scale: float = 1.0
    dummy_packets: bool = True
    label: str = ""

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise DomainError(f"未知的策略类型 {self.kind}", supported=STRATEGY_KINDS)
        if not self.rules:
            raise DomainError("策略至少需要一条速率规则")
        if self.f_scale <= 0 or self.g_scale <= 0:
            raise DomainError("f_scale / g_scale 必须为正")
        if self.kind == "fixed":
            if any(r.kind != "fixed" for r in self.rules):
                raise DomainError("固定速率策略只能使用 fixed 速率族")
            if not self.dummy_packets:
                # 固定速率下激活过程和队列无关，空队列也照样激活
                raise DomainError("固定速率策略要求 dummy_packets = True")

    # --- 构造 ---

    @classmethod
    def fixed(cls, nu: float, mu_deact: float = 1.0, label: str = "") -> "Strategy":
        return cls("fixed", (RateFunctionFamily.fixed(nu, mu_deact),), label=label or f"fixed(nu={nu:g})")

    @classmethod
    def from_fixed_rates(cls, rates: FixedRates, label: str = "") -> "Strategy":
        rules = tuple(
            RateFunctionFamily.fixed(float(n), float(m)) for n, m in zip(rates.nu, rates.mu_deact)
        )
        return cls("fixed", rules, label=label or "fixed(per-node)")

    @classmethod
    def queue_based(cls, family: RateFunctionFamily, dummy_packets: bool = True, label: str = "") -> "Strategy":
        return cls("queue_based", (family,), dummy_packets=dummy_packets, label=label or family.describe())

    @classmethod
    def from_probabilities(
        cls,
        family: RateFunctionFamily,
        nu: float,
        mu: float = 1.0,
        dummy_packets: bool = True,
        label: str = "",
    ) -> "Strategy":
        """φ = family.f、ψ = family.g 解释成概率：f = ν φ，g = μ ψ。"""
        xs = probe_grid()
        phi = np.asarray(family.f(xs), dtype=float)
        psi = np.asarray(family.g(xs), dtype=float)
        for name, values in (("phi", phi), ("psi", psi)):
            if np.any(values < 0) or np.any(values > 1.0 + 1e-12):
                raise ContractError(f"{name} 必须落在 [0, 1]", family=family.describe())
        return cls(
            "queue_based", (family,), f_scale=float(nu), g_scale=float(mu),
            dummy_packets=dummy_packets, label=label or f"{family.describe()}[nu={nu:g}]",
        )

    @classmethod
    def from_config(cls, spec: Dict[str, Any]) -> "Strategy":
        """
        {kind: fixed, nu, mu_deact}
        {kind: queue_based, family: {...}, dummy_packets}
        {kind: probabilities, family: {...}, nu, mu, dummy_packets}
        """
        kind = spec.get("kind")
        label = str(spec.get("label", ""))
        if kind == "fixed":
            return cls.fixed(float(spec["nu"]), float(spec.get("mu_deact", 1.0)), label=label)
        if kind == "queue_based":
            family = RateFunctionFamily.from_config(spec["family"])
            return cls.queue_based(family, bool(spec.get("dummy_packets", True)), label=label)
        if kind == "probabilities":
            family = RateFunctionFamily.from_config(spec["family"])
            return cls.from_probabilities(
                family, float(spec["nu"]), float(spec.get("mu", 1.0)),
                bool(spec.get("dummy_packets", True)), label=label,
            )
        raise DomainError(f"未知的策略类型 {kind}", supported=STRATEGY_KINDS + ("probabilities",))

    # --- 取值 ---

    def rule(self, node: int) -> RateFunctionFamily:
        return self.rules[0] if len(self.rules) == 1 else self.rules[node]

    def rule_index(self, node: int) -> int:
        return 0 if len(self.rules) == 1 else node

    def activation_rate(self, node: int, queue: int) -> float:
        if queue == 0 and not self.dummy_packets:
            return 0.0
        return self.f_scale * float(self.rule(node).f(float(queue)))

    def deactivation_rate(self, node: int, queue: int) -> float:
        return self.g_scale * float(self.rule(node).g(float(queue)))

    def fixed_rates(self, n_nodes: int) -> FixedRates:
        """固定速率策略对应的 (ν, μψ)，给乘积形式做对照。"""
        if self.kind != "fixed":
            raise DomainError("只有固定速率策略才有乘积形式")
        nu = [float(self.rule(i).param_dict["nu"]) for i in range(n_nodes)]
        mu = [float(self.rule(i).param_dict["mu_deact"]) for i in range(n_nodes)]
        return FixedRates.from_rates(nu, mu)

    def describe(self) -> str:
        return self.label or self.kind

    def check(self, tp: TrafficProfile):
        """在探测网格上核对 f ≥ 0、0 ≤ g ≤ μ_i；固定速率要求 ν > 0。"""
        n = tp.n_nodes
        if len(self.rules) not in (1, n):
            raise DomainError("逐节点规则的数量和节点数不一致", rules=len(self.rules), n_nodes=n)
        xs = np.concatenate([np.arange(0.0, 64.0), probe_grid()])
        for i in range(n if len(self.rules) > 1 else 1):
            family = self.rule(i)
            f = self.f_scale * np.asarray(family.f(xs), dtype=float)
            g = self.g_scale * np.asarray(family.g(xs), dtype=float)
            if not np.all(np.isfinite(f)) or np.any(f < 0):
                raise ContractError("激活速率 f 必须是有限非负数", node=i, strategy=self.describe())
            if self.kind == "fixed" and np.any(f <= 0):
                raise ContractError("固定速率的 ν 必须为正", node=i)
            mu_max = float(np.min(tp.mu)) if len(self.rules) == 1 else float(tp.mu[i])
            if np.any(g < 0) or np.any(g > mu_max * (1.0 + 1e-12)):
                raise ContractError("去激活速率 g 必须落在 [0, μ_i]", node=i, mu=mu_max, g_max=float(np.max(g)))
