# tests/test_topology.py
# -*- coding: utf-8 -*-

from fractions import Fraction

import pytest

from core.errors import (
    AssumptionViolatedError, CliqueConditionError, DecompositionError, DomainError, InvalidDescriptorError,
    NotIndependentError, ResourceError,
)
from topology.cliques import clique_cover, enumerate_cliques, is_clique
from topology.graph import build_topology
from topology.partite import (
    PartiteDecomposition, compute_zeta, h_value, h_values, is_complete_partite, omega_star, partite_decomposition,
)
from topology.state_space import ActivityState, enumerate_state_space


def _fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


# ---------- 构造 ----------

def test_complete_partite_edges(k55):
    assert k55.n_nodes == 10
    assert len(k55.edges) == 25
    assert k55.has_edge(0, 5) and k55.has_edge(9, 4)
    assert not k55.has_edge(0, 1)


def test_grid_row_major_numbering():
    g = build_topology({"kind": "grid", "rows": 2, "cols": 3})
    assert g.n_nodes == 6
    assert sorted(g.edges) == [(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]
    assert g.label(4) == "(1,1)"


def test_torus_wraps():
    g = build_topology({"kind": "grid", "rows": 4, "cols": 4, "wrap": True})
    assert all(len(g.neighbors(i)) == 4 for i in range(16))


def test_line_ring_star():
    assert len(build_topology({"kind": "line", "n": 5}).edges) == 4
    assert len(build_topology({"kind": "ring", "n": 6}).edges) == 6
    star = build_topology({"kind": "star", "leaves": 4})
    assert star.neighbors(0) == [1, 2, 3, 4]


def test_explicit_graph_and_labels():
    g = build_topology({"kind": "explicit", "n_nodes": 3, "edges": [[2, 0]], "labels": ["a", "b", "c"]})
    assert g.edges == frozenset({(0, 2)})
    assert g.label(2) == "c"


@pytest.mark.parametrize("descriptor", [
    {"kind": "explicit", "n_nodes": 2, "edges": [[1, 1]]},
    {"kind": "explicit", "n_nodes": 2, "edges": [[0, 5]]},
    {"kind": "complete_partite", "sizes": []},
    {"kind": "ring", "n": 2},
    {"kind": "hexagon", "n": 3},
    {"n": 3},
])
def test_invalid_descriptors(descriptor):
    with pytest.raises(InvalidDescriptorError):
        build_topology(descriptor)


def test_export_adjacency():
    g = build_topology({"kind": "line", "n": 3})
    assert g.export_adjacency() == "0: 1\n1: 0,2\n2: 1\n"


# ---------- 状态空间 ----------

@pytest.mark.parametrize("n", range(1, 13))
def test_path_state_space_is_fibonacci(n):
    g = build_topology({"kind": "line", "n": n})
    assert len(enumerate_state_space(g)) == _fib(n + 2)


def test_small_state_spaces(k55_space):
    assert len(k55_space) == 63
    four_cycle = build_topology({"kind": "ring", "n": 4})
    assert len(enumerate_state_space(four_cycle)) == 7
    assert len(enumerate_state_space(build_topology({"kind": "line", "n": 3}))) == 5


def test_state_space_is_downward_closed_and_starts_empty(k55_space):
    assert k55_space.is_downward_closed()
    assert k55_space.masks[0] == 0
    assert k55_space.empty_ordinal == 0


def test_transitions_pair_up(k55_space):
    t = k55_space.transitions()
    n_act = int(t["activation"].sum())
    assert n_act * 2 == len(t["src"])
    # 激活在前、去激活在后，一一互逆
    assert (t["src"][:n_act] == t["dst"][n_act:]).all()
    assert (t["dst"][:n_act] == t["src"][n_act:]).all()
    sizes = k55_space.sizes
    assert (sizes[t["dst"][:n_act]] == sizes[t["src"][:n_act]] + 1).all()


def test_ordinal_rejects_dependent_state(k55_space):
    with pytest.raises(DomainError):
        k55_space.ordinal(ActivityState.from_nodes([0, 5], 10))


def test_state_space_cap():
    g = build_topology({"kind": "line", "n": 10})
    with pytest.raises(ResourceError) as info:
        enumerate_state_space(g, cap=20)
    assert info.value.cap == "state_space"
    assert info.value.estimate > 20


def test_indicator_checks_bounds(k55_space):
    assert k55_space.indicator([0, 1]).sum() == 2
    with pytest.raises(DomainError):
        k55_space.indicator([63])


# ---------- 团 ----------

def test_cliques_of_k55(k55):
    maximal = enumerate_cliques(k55)
    assert len(maximal) == 25 and all(len(c) == 2 for c in maximal)
    assert len(enumerate_cliques(k55, size=1)) == 10
    assert is_clique(k55, [0, 5]) and not is_clique(k55, [0, 1])


def test_clique_cover_is_disjoint_and_covers(k55):
    cover = clique_cover(k55)
    nodes = [i for c in cover for i in c]
    assert sorted(nodes) == list(range(10))
    assert len(cover) == 5


# ---------- 多部分解 ----------

def test_partite_decomposition_k55(k55, k55_parts):
    assert k55_parts.K == 2
    assert k55_parts.sizes == (5, 5)
    assert k55_parts.M == 5 and k55_parts.M_star == 5
    assert is_complete_partite(k55, k55_parts)


def test_grid_parity_components():
    g = build_topology({"kind": "grid", "rows": 2, "cols": 2})
    d = partite_decomposition(g)
    assert d.components == ((1, 2), (0, 3))
    # 2×2 网格就是 4 环，也就是 K_{2,2}
    assert is_complete_partite(g, d)
    g23 = build_topology({"kind": "grid", "rows": 2, "cols": 3})
    assert not is_complete_partite(g23, partite_decomposition(g23))


def test_odd_ring_is_not_bipartite():
    with pytest.raises(DecompositionError):
        partite_decomposition(build_topology({"kind": "ring", "n": 5}))


def test_user_components_must_be_independent(k55):
    with pytest.raises(NotIndependentError):
        partite_decomposition(k55, [[0, 5], [1, 2, 3, 4, 6, 7, 8, 9]])


def test_clique_condition():
    # 星形加一个孤立点：孤立点不在任何 2-团里
    g = build_topology({"kind": "explicit", "n_nodes": 4, "edges": [[0, 1], [0, 2]]})
    with pytest.raises(CliqueConditionError) as info:
        partite_decomposition(g)
    assert info.value.nodes == [3]


def test_invalid_partition(k55):
    with pytest.raises(InvalidDescriptorError):
        partite_decomposition(k55, [[0, 1, 2, 3, 4]])


# ---------- H、ζ、Ω* ----------

def test_h_value_forms(k55_parts):
    assert h_value(0b11, k55_parts) == pytest.approx(0.4)
    assert h_value([1, 0, 0, 0, 0, 1, 0, 0, 0, 0], k55_parts) == pytest.approx(0.4)
    assert h_value(ActivityState.from_nodes(range(5), 10), k55_parts) == 1.0


def test_zeta_k55(k55_space, k55_parts):
    coeffs = compute_zeta(k55_space, k55_parts)
    assert coeffs.zeta_exact == Fraction(1, 5)
    assert len(coeffs.omega_star) == 2
    assert coeffs.omega_star == omega_star(k55_space, k55_parts)
    assert h_values(k55_space, k55_parts).max() == 1.0


def test_zeta_grid_2x2():
    g = build_topology({"kind": "grid", "rows": 2, "cols": 2})
    ss = enumerate_state_space(g)
    assert compute_zeta(ss, partite_decomposition(g)).zeta_exact == Fraction(1, 2)


def test_zeta_brute_force_complete_partite():
    g = build_topology({"kind": "complete_partite", "sizes": [2, 3]})
    ss = enumerate_state_space(g)
    d = partite_decomposition(g)
    star = set(omega_star(ss, d))
    brute = max(Fraction(sum(1 for i in c if (int(m) >> i) & 1), len(c))
                for k, m in enumerate(ss.masks) if k not in star for c in d.components)
    # 完全多部图里一个状态只能占一个分量，H 就是该分量的占比
    assert compute_zeta(ss, d).zeta_exact == 1 - brute


def test_assumption_violation_reported():
    # 绕过校验直接给一个不合格的分解：{0, 2} 不在 Ω* 里但 H = 2
    g = build_topology({"kind": "ring", "n": 4})
    ss = enumerate_state_space(g)
    d = PartiteDecomposition(components=((0,), (1, 3), (2,)), n_nodes=4)
    with pytest.raises(AssumptionViolatedError):
        compute_zeta(ss, d)
