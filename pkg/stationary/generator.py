# stationary/generator.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import numpy as np
from scipy import sparse

from core.errors import DomainError
from stationary.rates import FixedRates
from topology.state_space import StateSpace


def transition_rates(ss: StateSpace, rates: FixedRates):
    """状态图上每条跳转的 (src, dst, rate)：激活走 νφ，去激活走 μψ。"""
    if rates.n_nodes != ss.n_nodes:
        raise DomainError("速率向量长度和节点数不一致", rates=rates.n_nodes, nodes=ss.n_nodes)
    tr = ss.transitions()
    rate = np.where(tr["activation"], rates.nu[tr["node"]], rates.mu_deact[tr["node"]])
    return tr["src"], tr["dst"], rate


def build_generator(ss: StateSpace, rates: FixedRates) -> sparse.csr_matrix:
    """
    活动过程的无穷小生成元 Q（CSR）。
    Q[u, u'] = q(u, u')，对角线使每行和为 0。
    """
    src, dst, rate = transition_rates(ss, rates)
    n = len(ss)
    off = sparse.coo_matrix((rate, (src, dst)), shape=(n, n)).tocsr()
    exit_rate = np.asarray(off.sum(axis=1)).ravel()
    return (off - sparse.diags(exit_rate)).tocsr()
