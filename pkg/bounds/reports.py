# bounds/reports.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from core.errors import DomainError, InfeasibleLoadError
from topology.partite import PartiteDecomposition


class BoundKind(str, Enum):
    EQ2 = "Eq2"
    LEMMA1 = "Lemma1"
    THM1I = "Thm1i"
    THM1II = "Thm1ii"
    THM1III = "Thm1iii"
    PROP1 = "Prop1"
    PROP2 = "Prop2"
    THM2 = "Thm2"
    THM3 = "Thm3"
    THM4 = "Thm4"
    THM5 = "Thm5"
    EXAMPLE1 = "Example1"


class Target(str, Enum):
    AGGREGATE_QUEUE = "aggregate_queue"
    WEIGHTED_QUEUE = "weighted_queue"
    PER_NODE_QUEUE = "per_node_queue"
    MIXING_TIME = "mixing_time"
    ACTIVITY_FACTOR = "activity_factor"
    RETURN_TIME = "return_time"


@dataclass(frozen=True, eq=False)
class TrafficProfile:
    """
    每个节点的到达率 λ_i、服务率 μ_i 和负载 ρ_i = λ_i/μ_i。

    多部图场景下 rho_hat[k] 为分量负载 ρ̂_k（分量内每个节点 ρ_i = ρ̂_k），
    rho_total = Σ_k ρ̂_k，rho_min = min_k ρ̂_k。
    """

    lam: np.ndarray
    mu: np.ndarray
    rho_hat: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        mu = np.array(self.mu, dtype=float)
        if lam.shape != mu.shape or lam.ndim != 1:
            raise DomainError("λ / μ 长度不一致")
        if np.any(lam < 0) or np.any(mu <= 0):
            raise DomainError("要求 λ ≥ 0、μ > 0")
        lam.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def n_nodes(self) -> int:
        return int(self.lam.shape[0])

    @property
    def rho(self) -> np.ndarray:
        return self.lam / self.mu

    @property
    def rho_total(self) -> float:
        if self.rho_hat is None:
            raise DomainError("非多部负载没有 ρ 总量的定义")
        return float(sum(self.rho_hat))

    @property
    def rho_min(self) -> float:
        if self.rho_hat is None:
            raise DomainError("非多部负载没有 ρ_min 的定义")
        return float(min(self.rho_hat))

    def clique_load(self, clique: Iterable[int]) -> Tuple[float, float]:
        """(λ_C, ρ_C)。"""
        idx = sorted(int(i) for i in clique)
        return float(self.lam[idx].sum()), float(self.rho[idx].sum())

    @classmethod
    def from_loads(cls, rho: Sequence[float], mu: float = 1.0) -> "TrafficProfile":
        r = np.asarray(rho, dtype=float)
        m = np.full_like(r, float(mu))
        return cls(lam=r * m, mu=m)

    @classmethod
    def partite(
        cls,
        d: PartiteDecomposition,
        rho_total: float,
        split: Optional[Sequence[float]] = None,
        mu: float = 1.0,
    ) -> "TrafficProfile":
        """ρ̂_k = ρ·split_k（默认对称 1/K），分量内每个节点 ρ_i = ρ̂_k。"""
        if not (0.0 <= rho_total < 1.0):
            raise InfeasibleLoadError("总负载必须在 [0, 1)", rho=rho_total)
        weights = np.full(d.K, 1.0 / d.K) if split is None else np.asarray(split, dtype=float)
        if weights.shape != (d.K,) or np.any(weights < 0) or not math.isclose(weights.sum(), 1.0, rel_tol=1e-12):
            raise DomainError("split 必须是长度为 K、和为 1 的非负向量", split=list(weights))
        rho_hat = tuple(float(rho_total * w) for w in weights)
        per_node = np.asarray(rho_hat)[d.membership]
        mu_v = np.full(d.n_nodes, float(mu))
        return cls(lam=per_node * mu_v, mu=mu_v, rho_hat=rho_hat)


@dataclass(frozen=True)
class BoundReport:
    bound_kind: BoundKind
    target: Target
    value: float
    log10_value: float
    vacuous: bool
    witness: Dict[str, Any] = field(default_factory=dict)
    delay_equivalent: Optional[float] = None
    rho: Optional[float] = None
    parameters: Dict[str, Any] = field(default_factory=dict)

    def witness_descriptor(self) -> str:
        return json.dumps(self.witness, ensure_ascii=False, sort_keys=True, default=_jsonable)

    def as_row(self) -> Dict[str, Any]:
        return {
            "bound_kind": self.bound_kind.value,
            "target": self.target.value,
            "value": self.value,
            "log10_value": self.log10_value,
            "vacuous": self.vacuous,
            "witness_descriptor": self.witness_descriptor(),
            "rho": "" if self.rho is None else self.rho,
            "parameters": json.dumps(self.parameters, ensure_ascii=False, sort_keys=True, default=_jsonable),
        }


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.ndarray, frozenset, set, tuple)):
        return sorted(obj) if isinstance(obj, (frozenset, set)) else list(obj)
    return str(obj)


def make_report(
    kind: BoundKind,
    target: Target,
    value: Optional[float] = None,
    log10_value: Optional[float] = None,
    witness: Optional[Dict[str, Any]] = None,
    arrival_rate: Optional[float] = None,
    rho: Optional[float] = None,
    parameters: Optional[Dict[str, Any]] = None,
) -> BoundReport:
    """
    统一出口：value 或 log10_value 给一个即可（Thm4/5 这种只在对数域有意义的给后者）。
    ≤ 0 的值夹到 0 并标记 vacuous；arrival_rate 给出时按 Little 定律换算时延。
    """
    if log10_value is None:
        if value is None:
            raise DomainError("value 和 log10_value 至少给一个")
        value = float(value)
        log10_value = math.log10(value) if value > 0 else float("-inf")
    else:
        log10_value = float(log10_value)
        if log10_value == -math.inf:
            value = 0.0
        elif log10_value > 308.0:
            value = math.inf
        else:
            value = 10.0 ** log10_value
    if not (value > 0 or log10_value > -math.inf) or math.isnan(value):
        value, log10_value = 0.0, float("-inf")
    vacuous = log10_value == float("-inf")

    delay = None
    if arrival_rate is not None and arrival_rate > 0 and target is not Target.MIXING_TIME:
        delay = value / arrival_rate
    return BoundReport(
        bound_kind=kind,
        target=target,
        value=value,
        log10_value=log10_value,
        vacuous=vacuous,
        witness=dict(witness or {}),
        delay_equivalent=delay,
        rho=rho,
        parameters=dict(parameters or {}),
    )


REPORT_COLUMNS = ["bound_kind", "target", "value", "log10_value", "vacuous", "witness_descriptor", "rho", "parameters"]


def export_reports_csv(path: str, reports: Sequence[BoundReport]):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for r in reports:
            writer.writerow(r.as_row())
