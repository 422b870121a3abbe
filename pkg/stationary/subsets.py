# stationary/subsets.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from core.errors import DomainError
from stationary.distribution import StationaryDistribution
from stationary.generator import transition_rates
from stationary.rates import FixedRates


@dataclass(frozen=True, eq=False)
class SubsetAnalysis:
    """
    状态子集 B 的流量分析。

    flow = Q(B)（B → Ω∖B 方向），flow_reverse 为反方向算出的同一个量，用于平衡自检。
    """

    subset: np.ndarray
    pi_mass: float
    flow: float
    flow_reverse: float
    boundary: np.ndarray
    label: str = ""

    @property
    def bottleneck(self) -> float:
        return self.flow / self.pi_mass

    @property
    def expected_return_time(self) -> float:
        return 1.0 / self.bottleneck


def subset_analysis(
    dist: StationaryDistribution,
    subset,
    rates: Optional[FixedRates] = None,
    label: str = "",
) -> SubsetAnalysis:
    """Q(B)、π(B)、Φ(B) = Q(B)/π(B) 和边界 ∂B（B 中有速率跳出 B 的状态）。"""
    ss = dist.state_space
    rates = rates if rates is not None else dist.rates
    if rates is None:
        raise DomainError("subset_analysis 需要速率")
    inside = ss.indicator(subset)
    count = int(inside.sum())
    if count == 0 or count == len(ss):
        raise DomainError("子集必须非空且不等于 Ω", size=count)

    src, dst, rate = transition_rates(ss, rates)
    leaving = inside[src] & ~inside[dst]
    entering = ~inside[src] & inside[dst]
    weighted = dist.pi[src] * rate

    boundary = np.unique(src[leaving])
    boundary.setflags(write=False)
    members = np.nonzero(inside)[0]
    members.setflags(write=False)
    return SubsetAnalysis(
        subset=members,
        pi_mass=float(dist.pi[inside].sum()),
        flow=float(weighted[leaving].sum()),
        flow_reverse=float(weighted[entering].sum()),
        boundary=boundary,
        label=label,
    )


def export_subset_csv(path: str, analyses: Sequence[SubsetAnalysis]):
    """写 `subset_id,pi_mass,flow,bottleneck`；subset_id 优先用 label。"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["subset_id", "pi_mass", "flow", "bottleneck"])
        for k, sa in enumerate(analyses):
            writer.writerow([sa.label or str(k), repr(sa.pi_mass), repr(sa.flow), repr(sa.bottleneck)])
