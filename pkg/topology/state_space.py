# topology/state_space.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core import settings
from core.errors import DomainError, ResourceError
from topology.graph import InterferenceGraph

logger = logging.getLogger(__name__)

# 位掩码用 int64 存，最多 62 个节点
MAX_NODES = 62


@dataclass(frozen=True)
class ActivityState:
    """联合激活向量 u ∈ {0,1}^N，bit i 对应节点 i。"""

    mask: int
    n_nodes: int

    @property
    def bits(self) -> Tuple[int, ...]:
        return tuple((self.mask >> i) & 1 for i in range(self.n_nodes))

    @property
    def active(self) -> List[int]:
        return [i for i in range(self.n_nodes) if (self.mask >> i) & 1]

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_nodes(cls, nodes: Iterable[int], n_nodes: int) -> "ActivityState":
        mask = 0
        for i in nodes:
            mask |= 1 << int(i)
        return cls(mask=mask, n_nodes=n_nodes)


class StateSpace:
    """
    可行激活状态集合 Ω（干扰图的全部独立集）。

    - 顺序：按 bit 向量 (u_1, ..., u_N) 字典序，空集排第一；
    - masks / bits 是只读 numpy 数组，下游所有序号都以此为准；
    - transitions() 给出状态图上的全部可行跳转（激活 + 去激活）。
    """

    def __init__(self, graph: InterferenceGraph, masks: Sequence[int]):
        self.graph = graph
        self.n_nodes = graph.n_nodes
        self.masks = np.asarray(masks, dtype=np.int64)
        self.masks.setflags(write=False)
        self.index: Dict[int, int] = {int(m): k for k, m in enumerate(self.masks)}
        self._sorted_order = np.argsort(self.masks, kind="stable")
        self._sorted_masks = self.masks[self._sorted_order]

    def __len__(self) -> int:
        return int(self.masks.shape[0])

    def __contains__(self, item) -> bool:
        mask = item.mask if isinstance(item, ActivityState) else int(item)
        return mask in self.index

    def state(self, ordinal: int) -> ActivityState:
        return ActivityState(mask=int(self.masks[ordinal]), n_nodes=self.n_nodes)

    def ordinal(self, item) -> int:
        mask = item.mask if isinstance(item, ActivityState) else int(item)
        try:
            return self.index[mask]
        except KeyError:
            raise DomainError("状态不在 Ω 中（不是独立集）", mask=mask)

    def ordinals_of(self, masks: np.ndarray) -> np.ndarray:
        """批量查询：掩码 → 序号（要求全部在 Ω 中）。"""
        pos = np.searchsorted(self._sorted_masks, masks)
        return self._sorted_order[pos]

    @property
    def empty_ordinal(self) -> int:
        return self.index[0]

    @cached_property
    def bits(self) -> np.ndarray:
        """(|Ω|, N) 的 0/1 矩阵。"""
        shifts = np.arange(self.n_nodes, dtype=np.int64)
        out = ((self.masks[:, None] >> shifts[None, :]) & 1).astype(np.int8)
        out.setflags(write=False)
        return out

    @cached_property
    def sizes(self) -> np.ndarray:
        return self.bits.sum(axis=1).astype(np.int64)

    @cached_property
    def _deactivations(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        # 每条去激活 u → u - e_i 反过来就是一条激活，所以只需枚举去激活
        src, node = np.nonzero(self.bits)
        dst_masks = self.masks[src] ^ (np.int64(1) << node.astype(np.int64))
        dst = self.ordinals_of(dst_masks)
        return src.astype(np.int64), dst.astype(np.int64), node.astype(np.int64)

    def transitions(self) -> Dict[str, np.ndarray]:
        """
        返回状态图上的全部跳转：
            src, dst, node: 同长数组；activation: 是否为激活跳转（u → u + e_i）
        """
        src_d, dst_d, node_d = self._deactivations
        src = np.concatenate([dst_d, src_d])
        dst = np.concatenate([src_d, dst_d])
        node = np.concatenate([node_d, node_d])
        activation = np.concatenate([np.ones_like(node_d, dtype=bool), np.zeros_like(node_d, dtype=bool)])
        return {"src": src, "dst": dst, "node": node, "activation": activation}

    def states_with_active(self, nodes: Iterable[int]) -> np.ndarray:
        """至少有一个给定节点激活的状态序号。"""
        nodes = list(nodes)
        if not nodes:
            return np.zeros(0, dtype=np.int64)
        return np.nonzero(self.bits[:, nodes].sum(axis=1) > 0)[0]

    def indicator(self, subset) -> np.ndarray:
        """状态子集 → 长度 |Ω| 的布尔数组。subset 可以是布尔数组或序号序列。"""
        arr = np.asarray(subset)
        if arr.dtype == bool:
            if arr.shape != (len(self),):
                raise DomainError("布尔子集长度必须等于 |Ω|", expected=len(self), got=arr.shape)
            return arr.copy()
        out = np.zeros(len(self), dtype=bool)
        if arr.size:
            idx = arr.astype(np.int64).ravel()
            if idx.min() < 0 or idx.max() >= len(self):
                raise DomainError("状态序号越界", size=len(self))
            out[idx] = True
        return out

    def is_downward_closed(self) -> bool:
        src, node = np.nonzero(self.bits)
        dst_masks = self.masks[src] ^ (np.int64(1) << node.astype(np.int64))
        pos = np.clip(np.searchsorted(self._sorted_masks, dst_masks), 0, len(self) - 1)
        return bool(np.all(self._sorted_masks[pos] == dst_masks))

    def is_independent(self, mask: int) -> bool:
        nbr = self.graph.neighbor_masks()
        return all(not (mask & nbr[i]) for i in range(self.n_nodes) if (mask >> i) & 1)


def enumerate_state_space(graph: InterferenceGraph, cap: Optional[int] = None) -> StateSpace:
    """
    枚举全部独立集：按最小未决节点分支（先不选、再选），邻居掩码剪枝。
    超过 cap 立即停止并抛 ResourceError（estimate 为已找到的数量，是 |Ω| 的下界）。
    """
    n = graph.n_nodes
    if n > MAX_NODES:
        raise ResourceError("节点数超过位掩码上限", cap="max_nodes", limit=MAX_NODES, estimate=n)
    limit = cap if cap is not None else settings.cap("state_space")
    nbr = graph.neighbor_masks()
    found: List[int] = []

    def rec(i: int, mask: int, forbidden: int):
        if i == n:
            found.append(mask)
            if len(found) > limit:
                raise ResourceError(
                    "状态空间超过上限，拒绝近似", cap="state_space", limit=limit, estimate=len(found)
                )
            return
        rec(i + 1, mask, forbidden)
        if not (forbidden >> i) & 1:
            rec(i + 1, mask | (1 << i), forbidden | nbr[i])

    rec(0, 0, 0)
    logger.debug("[Topology] |Ω| = %d（N=%d）", len(found), n)
    return StateSpace(graph, found)
