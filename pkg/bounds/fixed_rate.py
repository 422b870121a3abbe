# bounds/fixed_rate.py
# -*- coding: utf-8 -*-
"""
固定速率下基于状态子集 B 的下界。

队长：½ · D(w,S,B) · π(B)/Φ(B)，D = Σ_{i∈S} w_i λ_i - max_{u∈B} Σ_{i∈S} w_i μ_i u_i；
混合时间：(1 - 2ε - π(B)) / Φ(B)。
两者都只在调用方给出的候选子集上取最大，不做 2^|Ω| 的全局搜索。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from core.errors import DomainError, PreconditionError
from bounds.reports import BoundKind, BoundReport, Target, TrafficProfile, make_report
from stationary.distribution import StationaryDistribution
from stationary.subsets import subset_analysis
from topology.partite import PartiteDecomposition
from topology.state_space import StateSpace

logger = logging.getLogger(__name__)

# Δ(S) 判定时的相对容差
_DRIFT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Candidate:
    """一个候选状态子集 B（布尔指示向量）及其名字。"""

    label: str
    members: np.ndarray


@dataclass(frozen=True, eq=False)
class DriftCoefficients:
    weights: np.ndarray
    node_subset: tuple
    y: float
    d: float
    delta_set: np.ndarray
    delta: Optional[float]


def _weights(weights, n_nodes: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim == 0:
        w = np.full(n_nodes, float(w))
    if w.shape != (n_nodes,) or np.any(w < 0):
        raise DomainError("权重 w 必须是长度为 N 的非负向量")
    return w


def _node_subset(S: Iterable[int], n_nodes: int) -> List[int]:
    idx = sorted({int(i) for i in S})
    if not idx or idx[0] < 0 or idx[-1] >= n_nodes:
        raise DomainError("节点子集 S 必须非空且在 V 内", S=idx)
    return idx


def drift_coefficients(
    ss: StateSpace,
    tp: TrafficProfile,
    weights,
    S: Iterable[int],
    B=None,
) -> DriftCoefficients:
    """Y(w,S,B)、D(w,S,B)，以及在整个 Ω 上的 Δ(S)、δ(S)。B 为空时取 Ω。"""
    w = _weights(weights, ss.n_nodes)
    idx = _node_subset(S, ss.n_nodes)
    inside = np.ones(len(ss), dtype=bool) if B is None else ss.indicator(B)
    if not inside.any():
        raise DomainError("状态子集 B 不能为空")

    service = ss.bits[:, idx].astype(float) @ (w[idx] * tp.mu[idx])
    demand = float(np.sum(w[idx] * tp.lam[idx]))
    y = float(service[inside].max())

    tol = _DRIFT_TOL * max(1.0, demand)
    in_delta = service >= demand - tol
    delta_set = np.nonzero(in_delta)[0]
    delta_set.setflags(write=False)
    delta = float(demand - service[~in_delta].max()) if (~in_delta).any() else None
    return DriftCoefficients(
        weights=w, node_subset=tuple(idx), y=y, d=demand - y, delta_set=delta_set, delta=delta,
    )


# === 候选子集族 ===

def component_sets(ss: StateSpace, d: PartiteDecomposition) -> List[Candidate]:
    """B_k：V_k 中至少一个节点激活的状态。"""
    out = []
    for k, comp in enumerate(d.components):
        members = np.zeros(len(ss), dtype=bool)
        members[ss.states_with_active(comp)] = True
        out.append(Candidate(label=f"B_{k + 1}", members=members))
    return out


def singleton_complement_sets(ss: StateSpace) -> List[Candidate]:
    """Ω∖{u}，对每个 u。"""
    out = []
    for k in range(len(ss)):
        members = np.ones(len(ss), dtype=bool)
        members[k] = False
        out.append(Candidate(label=f"not_{ss.state(k).bitstring()}", members=members))
    return out


def candidates_from_config(ss: StateSpace, specs: Sequence[Dict[str, Any]]) -> List[Candidate]:
    """
    用户自定义候选：
        {label, active_any: [节点...]}   至少一个给定节点激活
        {label, states: ["0101", ...]}   显式列出状态（bit 串，第 i 位对应节点 i）
    """
    out = []
    for n, spec in enumerate(specs):
        label = str(spec.get("label", f"user_{n + 1}"))
        members = np.zeros(len(ss), dtype=bool)
        if "active_any" in spec:
            members[ss.states_with_active(int(i) for i in spec["active_any"])] = True
        elif "states" in spec:
            for bits in spec["states"]:
                bits = str(bits)
                if len(bits) != ss.n_nodes or set(bits) - {"0", "1"}:
                    raise DomainError("状态 bit 串长度或字符不对", state=bits)
                mask = sum(1 << i for i, ch in enumerate(bits) if ch == "1")
                members[ss.ordinal(mask)] = True
        else:
            raise DomainError("候选子集需要 active_any 或 states", label=label)
        out.append(Candidate(label=label, members=members))
    return out


def _proper(ss: StateSpace, cand: Candidate) -> bool:
    count = int(cand.members.sum())
    return 0 < count < len(ss)


# === Prop 1 / Prop 2 ===

def prop1_bound(
    ss: StateSpace,
    dist: StationaryDistribution,
    tp: TrafficProfile,
    weights,
    S: Iterable[int],
    candidates: Sequence[Candidate],
) -> BoundReport:
    """Σ_{i∈S} w_i E[L_i] ≥ ½ max_B D(w,S,B) π(B)/Φ(B)，D ≤ 0 的候选跳过。"""
    if not candidates:
        raise DomainError("候选子集族不能为空")
    w = _weights(weights, ss.n_nodes)
    idx = _node_subset(S, ss.n_nodes)
    best, witness = 0.0, {}
    for cand in candidates:
        if not _proper(ss, cand):
            continue
        drift = drift_coefficients(ss, tp, w, idx, cand.members)
        if drift.d <= 0:
            continue
        sa = subset_analysis(dist, cand.members)
        value = 0.5 * drift.d * sa.pi_mass / sa.bottleneck
        if value > best:
            best = value
            witness = {"subset": cand.label, "D": drift.d, "pi_B": sa.pi_mass, "phi_B": sa.bottleneck}
    if best == 0.0:
        logger.warning("[Bounds] Prop1：所有候选的 D ≤ 0，下界为空")
    uniform = bool(np.all(w[idx] == w[idx][0]))
    arrival = float(tp.lam[idx].sum() * w[idx][0]) if uniform else None
    witness.update({"S": idx})
    return make_report(
        BoundKind.PROP1, Target.WEIGHTED_QUEUE, value=best, witness=witness,
        arrival_rate=arrival, parameters={"weights": w[idx].tolist(), "candidates": len(candidates)},
    )


def prop2_bound(dist: StationaryDistribution, candidates: Sequence[Candidate], epsilon: float) -> BoundReport:
    """t_mix(ε) ≥ max_B (1 - 2ε - π(B)) / Φ(B)，夹到 0。"""
    if not (0.0 < epsilon < 0.5):
        raise DomainError("ε 必须落在 (0, 1/2)", epsilon=epsilon)
    ss = dist.state_space
    best, witness = 0.0, {}
    for cand in candidates:
        if not _proper(ss, cand):
            continue
        sa = subset_analysis(dist, cand.members)
        value = (1.0 - 2.0 * epsilon - sa.pi_mass) / sa.bottleneck
        if value > best:
            best = value
            witness = {"subset": cand.label, "pi_B": sa.pi_mass, "phi_B": sa.bottleneck}
    return make_report(
        BoundKind.PROP2, Target.MIXING_TIME, value=best, witness=witness,
        parameters={"epsilon": epsilon, "candidates": len(candidates)},
    )


# === 活跃跨度与等速率返回时间 ===

def activity_span(ss: StateSpace, B, nodes: Optional[Iterable[int]] = None) -> int:
    """K(B, S') = max_{u∈B} Σ_{i∈S'} u_i；nodes 为空时 S' = V。"""
    inside = ss.indicator(B)
    if not inside.any():
        return 0
    cols = list(range(ss.n_nodes)) if nodes is None else sorted(int(i) for i in nodes)
    return int(ss.bits[inside][:, cols].sum(axis=1).max())


def state_boundary(ss: StateSpace, B) -> np.ndarray:
    """∂B：B 中存在跳出 B 的可行跳转的状态（速率都为正，只看状态图）。"""
    inside = ss.indicator(B)
    tr = ss.transitions()
    leaving = inside[tr["src"]] & ~inside[tr["dst"]]
    return np.unique(tr["src"][leaving])


def example1_return_time_bound(ss: StateSpace, B, nu: float) -> BoundReport:
    """
    φ ≡ ψ ≡ μ ≡ 1、ν_i ≡ ν ≥ 1，且 ∂B 中的状态不能靠激活离开 B 时：
        E[T_B] = 1/Φ(B) ≥ ν^{K(B,V) - K(∂B,V)} / N
    """
    if nu < 1.0:
        raise PreconditionError("需要 ν ≥ 1", nu=nu)
    inside = ss.indicator(B)
    if not inside.any() or inside.all():
        raise DomainError("子集必须非空且不等于 Ω")
    tr = ss.transitions()
    escapes = tr["activation"] & inside[tr["src"]] & ~inside[tr["dst"]]
    if escapes.any():
        raise PreconditionError("∂B 中存在靠激活离开 B 的状态", state=ss.state(int(tr["src"][escapes][0])).bitstring())
    boundary = state_boundary(ss, inside)
    exponent = activity_span(ss, inside) - activity_span(ss, boundary)
    value = nu ** exponent / ss.n_nodes
    return make_report(
        BoundKind.EXAMPLE1, Target.RETURN_TIME, value=value,
        witness={"K_B": activity_span(ss, inside), "K_boundary": activity_span(ss, boundary)},
        parameters={"nu": nu},
    )
