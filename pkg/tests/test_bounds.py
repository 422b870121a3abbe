# tests/test_bounds.py
# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest

from core.errors import (
    ContractError, DomainError, InfeasibleLoadError, InverseError, InverseOverflowError, PreconditionError,
    WrongTopologyError,
)
from bounds.diagnostics import lemma_diagnostics
from bounds.extension import rho_gamma, thm4_bound, thm5_bound
from bounds.fixed_rate import (
    Candidate, activity_span, candidates_from_config, component_sets, drift_coefficients, example1_return_time_bound,
    prop1_bound, prop2_bound, singleton_complement_sets, state_boundary,
)
from bounds.partite_bounds import thm2_bound, thm2_symmetric_bound, thm3_bound
from bounds.paths import h_star_min, maximin_paths, partite_sets
from bounds.queue_based import (
    activity_factor_requirement, clique_load_bound, thm1_concave_f, thm1_convex_g, thm1_h_bound,
    thm1_h_cover_total,
)
from bounds.rate_functions import RateFunctionFamily
from bounds.reports import BoundKind, Target, TrafficProfile, export_reports_csv, make_report
from stationary.distribution import product_form, symmetric_partite_sigma
from stationary.mixing import mixing_time
from stationary.rates import FixedRates
from stationary.subsets import subset_analysis
from topology.cliques import clique_cover
from topology.graph import build_topology
from topology.partite import partite_decomposition
from topology.state_space import enumerate_state_space


def _partite(sizes, rho):
    g = build_topology({"kind": "complete_partite", "sizes": sizes})
    d = partite_decomposition(g)
    return g, enumerate_state_space(g), d, TrafficProfile.partite(d, rho)


# ---------- BoundReport ----------

def test_make_report_clamps_to_vacuous():
    r = make_report(BoundKind.EQ2, Target.AGGREGATE_QUEUE, value=-3.0)
    assert r.value == 0.0 and r.vacuous and r.log10_value == -math.inf


def test_make_report_log_domain():
    r = make_report(BoundKind.THM4, Target.WEIGHTED_QUEUE, log10_value=-400.0)
    assert r.value == 0.0 and not r.vacuous
    big = make_report(BoundKind.THM4, Target.WEIGHTED_QUEUE, log10_value=500.0)
    assert big.value == math.inf


def test_make_report_delay_equivalent():
    r = make_report(BoundKind.EQ2, Target.AGGREGATE_QUEUE, value=3.0, arrival_rate=1.5)
    assert r.delay_equivalent == pytest.approx(2.0)
    mix = make_report(BoundKind.PROP2, Target.MIXING_TIME, value=3.0, arrival_rate=1.5)
    assert mix.delay_equivalent is None
    with pytest.raises(DomainError):
        make_report(BoundKind.EQ2, Target.AGGREGATE_QUEUE)


def test_export_reports_csv(tmp_path):
    path = tmp_path / "bounds.csv"
    export_reports_csv(str(path), [make_report(BoundKind.EQ2, Target.AGGREGATE_QUEUE, value=1.0, witness={"clique": [0, 1]})])
    header, row = path.read_text(encoding="utf-8").splitlines()
    assert header.startswith("bound_kind,target,value,log10_value,vacuous")
    assert row.startswith("Eq2,aggregate_queue,1.0,0.0,False")


def test_traffic_profile_partite_split():
    g = build_topology({"kind": "complete_partite", "sizes": [2, 3]})
    d = partite_decomposition(g)
    tp = TrafficProfile.partite(d, 0.8, split=[0.25, 0.75])
    assert tp.rho_hat == pytest.approx((0.2, 0.6))
    assert tp.rho.tolist() == pytest.approx([0.2, 0.2, 0.6, 0.6, 0.6])
    assert tp.rho_min == pytest.approx(0.2)
    with pytest.raises(InfeasibleLoadError):
        TrafficProfile.partite(d, 1.0)
    with pytest.raises(DomainError):
        TrafficProfile.partite(d, 0.5, split=[0.5, 0.6])
    with pytest.raises(DomainError):
        TrafficProfile.from_loads([0.5]).rho_total


# ---------- 速率函数族 ----------

def test_family_values_and_inverses():
    ll = RateFunctionFamily.loglog()
    assert float(ll.h(math.e - 1)) == pytest.approx(1.0)
    assert ll.h_inverse(0.5) == pytest.approx(math.exp(0.5) - 1, rel=1e-9)
    assert ll.g_inverse(0.5) == pytest.approx(math.e - 1, rel=1e-9)
    poly = RateFunctionFamily.polynomial(0.5, 2.0)
    assert poly.f_inverse(3.0) == pytest.approx(9.0, rel=1e-9)
    assert float(poly.h(4.0)) == pytest.approx(1.0)


def test_inverse_out_of_range():
    with pytest.raises(InverseError):
        RateFunctionFamily.loglog().f_inverse(1.5)
    with pytest.raises(InverseError):
        RateFunctionFamily.loglog().g_inverse(2.0)


def test_shape_contracts():
    RateFunctionFamily.loglog().require_concave_increasing_f()
    RateFunctionFamily.loglog().require_convex_decreasing_g()
    with pytest.raises(ContractError):
        RateFunctionFamily.polynomial(2.0).require_concave_increasing_f()
    decreasing = RateFunctionFamily.tabulated([0, 1, 2], [1.0, 0.5, 0.2], [1, 1, 1])
    with pytest.raises(ContractError):
        decreasing.require_concave_increasing_f()


@pytest.mark.parametrize("spec", [
    {"kind": "fixed", "nu": 0.0},
    {"kind": "polynomial", "a": -1},
    {"kind": "tabulated", "xs": [0, 0], "f": [1, 1], "g": [1, 1]},
    {"kind": "tabulated", "xs": [0, 1], "f": [1, 1], "g": [1, 0]},
    {"kind": "sigmoid"},
])
def test_family_validation(spec):
    with pytest.raises(DomainError):
        RateFunctionFamily.from_config(spec)


def test_families_are_hashable_and_comparable():
    assert RateFunctionFamily.polynomial(1, 1) == RateFunctionFamily.from_config({"kind": "polynomial"})
    assert len({RateFunctionFamily.loglog(), RateFunctionFamily.loglog()}) == 1


# ---------- 团负载与队列相关策略 ----------

def test_clique_load_bound():
    tp = TrafficProfile.from_loads([0.2, 0.3, 0.1])
    r = clique_load_bound(tp, [0, 1])
    assert r.value == pytest.approx(1.0)
    assert r.delay_equivalent == pytest.approx(2.0)
    with pytest.raises(InfeasibleLoadError):
        clique_load_bound(TrafficProfile.from_loads([0.6, 0.5]), [0, 1])


def test_activity_factor_requirement():
    tp = TrafficProfile.from_loads([0.2, 0.3])
    assert activity_factor_requirement(tp, [0, 1], 0) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        activity_factor_requirement(tp, [0], 1)


def test_thm1_concave_f():
    tp = TrafficProfile.from_loads([0.2, 0.3])
    r = thm1_concave_f(tp, [0, 1], RateFunctionFamily.polynomial(0.5, 1.0), xi=1.0)
    # 0.5 (排队项) + 2·(0.5)² + 0.5
    assert r.value == pytest.approx(1.5, rel=1e-9)


def test_thm1_convex_g_closed_form():
    tp = TrafficProfile.from_loads([0.4, 0.4])
    r = thm1_convex_g(tp, [0, 1], RateFunctionFamily.loglog(), xi=1.0)
    assert r.value == pytest.approx(0.8 * (math.e - 1), rel=1e-9)
    assert r.target is Target.WEIGHTED_QUEUE


def test_thm1_convex_g_outside_range_is_vacuous():
    tp = TrafficProfile.from_loads([0.1, 0.1])
    r = thm1_convex_g(tp, [0, 1], RateFunctionFamily.loglog(), xi=1.0)
    assert r.vacuous and r.value == 0.0


def test_thm1_convex_g_beyond_numeric_range_is_infinite():
    # ρ_C → 1 时 g^{-1} 的解超过数值上限：下界应是 +∞ 而不是空
    tp = TrafficProfile.from_loads([0.49995, 0.49995])
    r = thm1_convex_g(tp, [0, 1], RateFunctionFamily.loglog(), xi=1.0)
    assert not r.vacuous
    assert r.value == math.inf and r.log10_value == math.inf


def test_thm1_h_beyond_numeric_range_is_infinite():
    r = thm1_h_bound(TrafficProfile.from_loads([0.49995, 0.49995]), [0, 1], RateFunctionFamily.loglog())
    assert r.value == math.inf and not r.vacuous


def test_inverse_overflow_is_a_distinct_error():
    with pytest.raises(InverseOverflowError):
        RateFunctionFamily.loglog().g_inverse(1e-4)
    with pytest.raises(InverseError) as info:
        RateFunctionFamily.loglog().g_inverse(2.0)
    assert not isinstance(info.value, InverseOverflowError)


def test_thm1_h_loglog_and_monotone():
    family = RateFunctionFamily.loglog()
    r = thm1_h_bound(TrafficProfile.from_loads([0.25, 0.25]), [0, 1], family)
    assert r.value == pytest.approx(math.exp(0.5) - 1, rel=1e-9)
    values = [thm1_h_bound(TrafficProfile.from_loads([x, x]), [0, 1], family).value for x in (0.1, 0.2, 0.3, 0.4)]
    assert values == sorted(values)


def test_thm1_h_cover_on_k55(k55):
    d = partite_decomposition(k55)
    tp = TrafficProfile.partite(d, 0.5)
    family = RateFunctionFamily.polynomial(1.0, 1.0)
    per_clique = thm1_h_bound(tp, [0, 5], family)
    assert per_clique.value == pytest.approx(0.5, rel=1e-9)
    total = thm1_h_cover_total(tp, clique_cover(k55), family)
    assert total.value == pytest.approx(5.0, rel=1e-9)
    assert total.target is Target.AGGREGATE_QUEUE


# ---------- 固定速率：子集下界与返回时间 ----------

def test_drift_coefficients_k55(k55_space, k55_parts):
    tp = TrafficProfile.partite(k55_parts, 0.8)
    drift = drift_coefficients(k55_space, tp, 1.0, [0])
    assert drift.delta == pytest.approx(0.4)
    assert all(k55_space.bits[k, 0] == 1 for k in drift.delta_set)
    assert drift.y == pytest.approx(1.0)


def test_candidate_families(k22):
    ss = enumerate_state_space(k22)
    d = partite_decomposition(k22)
    comps = component_sets(ss, d)
    assert [c.label for c in comps] == ["B_1", "B_2"]
    assert int(comps[0].members.sum()) == 3
    assert len(singleton_complement_sets(ss)) == len(ss)
    user = candidates_from_config(ss, [{"label": "x", "states": ["1100", "1000"]}, {"active_any": [2]}])
    assert int(user[0].members.sum()) == 2 and user[1].label == "user_2"
    with pytest.raises(DomainError):
        candidates_from_config(ss, [{"states": ["11"]}])
    with pytest.raises(DomainError):
        candidates_from_config(ss, [{"label": "empty"}])


@pytest.mark.parametrize("sizes", [[2, 2], [3, 3]])
@pytest.mark.parametrize("rho", [0.6, 0.8])
def test_prop2_is_below_exact_mixing_time(sizes, rho):
    g, ss, d, tp = _partite(sizes, rho)
    theta = rho / 2 + 0.02
    rates = FixedRates.from_sigma(symmetric_partite_sigma(d, theta), n_nodes=g.n_nodes)
    dist = product_form(ss, rates)
    bound = prop2_bound(dist, component_sets(ss, d), 0.05)
    exact = mixing_time(ss, rates, 0.05).t_mix
    assert 0.0 < bound.value < exact


def test_prop1_positive_at_heavy_load():
    g, ss, d, tp = _partite([3, 3], 0.8)
    rates = FixedRates.from_sigma(symmetric_partite_sigma(d, 0.42), n_nodes=g.n_nodes)
    dist = product_form(ss, rates)
    r = prop1_bound(ss, dist, tp, 1.0, list(d.components[0]), component_sets(ss, d))
    assert r.value > 0 and not r.vacuous
    assert r.witness["S"] == [0, 1, 2]


def test_prop1_vacuous_when_no_positive_drift(k22):
    ss = enumerate_state_space(k22)
    d = partite_decomposition(k22)
    tp = TrafficProfile.partite(d, 0.2)
    dist = product_form(ss, FixedRates.from_sigma(1.0, n_nodes=4))
    full = np.ones(len(ss), dtype=bool)
    full[ss.empty_ordinal] = False
    # B 里有能服务全部需求的状态，D ≤ 0
    r = prop1_bound(ss, dist, tp, 1.0, [0], [Candidate("busy", full)])
    assert r.vacuous


def test_prop2_epsilon_range(k22):
    ss = enumerate_state_space(k22)
    dist = product_form(ss, FixedRates.from_sigma(1.0, n_nodes=4))
    with pytest.raises(DomainError):
        prop2_bound(dist, component_sets(ss, partite_decomposition(k22)), 0.6)


def test_activity_span_and_boundary(k55_space, k55_parts):
    B = k55_space.states_with_active(k55_parts.components[0])
    assert activity_span(k55_space, B) == 5
    boundary = state_boundary(k55_space, B)
    assert len(boundary) == 5
    assert activity_span(k55_space, boundary) == 1
    assert activity_span(k55_space, B, nodes=[5, 6]) == 0


def test_example1_return_time(k55_space, k55_parts):
    B = k55_space.states_with_active(k55_parts.components[0])
    r = example1_return_time_bound(k55_space, B, 2.0)
    assert r.value == pytest.approx(2.0 ** 4 / 10)
    dist = product_form(k55_space, FixedRates.from_sigma(2.0, n_nodes=10))
    assert subset_analysis(dist, B).expected_return_time >= r.value
    with pytest.raises(PreconditionError):
        example1_return_time_bound(k55_space, B, 0.5)


def test_example1_rejects_escaping_boundary(k55_space):
    # 只含空状态的 B：可以靠激活离开
    with pytest.raises(PreconditionError):
        example1_return_time_bound(k55_space, [k55_space.empty_ordinal], 2.0)


# ---------- 完全多部图 ----------

def test_thm2_symmetric_curve(k55, k55_parts):
    assert thm2_symmetric_bound(k55_parts, 0.9, k55).value == pytest.approx(6.793990, rel=1e-6)
    assert thm2_symmetric_bound(k55_parts, 0.5, k55).value == pytest.approx(1.302083e-4, rel=1e-6)
    assert 10 * thm2_symmetric_bound(k55_parts, 0.9).value == pytest.approx(67.939901, rel=1e-6)


def test_thm2_symmetric_edge_cases(k55_parts):
    assert thm2_symmetric_bound(k55_parts, 0.0).vacuous
    single = partite_decomposition(build_topology({"kind": "line", "n": 1}))
    assert thm2_symmetric_bound(single, 0.5).vacuous
    uneven = partite_decomposition(build_topology({"kind": "complete_partite", "sizes": [2, 3]}))
    with pytest.raises(WrongTopologyError):
        thm2_symmetric_bound(uneven, 0.5)
    with pytest.raises(InfeasibleLoadError):
        thm2_symmetric_bound(k55_parts, 1.0)


def test_thm2_general(k55, k55_parts):
    tp = TrafficProfile.partite(k55_parts, 0.9)
    r = thm2_bound(k55_parts, tp, 1.0, range(5), k55)
    expected = (1 / 10) * 0.45 ** 6 * (5 * 0.45) * 10 ** 4
    assert r.value == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        thm2_bound(k55_parts, tp, 1.0, [0, 5], k55)


def test_thm2_needs_complete_partite():
    g = build_topology({"kind": "grid", "rows": 2, "cols": 3})
    d = partite_decomposition(g)
    with pytest.raises(WrongTopologyError):
        thm2_bound(d, TrafficProfile.partite(d, 0.5), 1.0, list(d.components[0]), g)


def test_thm3_formula(k22):
    d = partite_decomposition(k22)
    tp = TrafficProfile.partite(d, 0.9)
    assert thm3_bound(d, tp, 0.05, k22).value == pytest.approx(0.354375, rel=1e-12)
    assert thm3_bound(d, tp, 0.3, k22).vacuous


# ---------- 路径结构与一般多部图 ----------

def test_maximin_on_four_cycle(k22):
    ss = enumerate_state_space(k22)
    d = partite_decomposition(k22)
    assert len(ss) == 7
    v1 = ss.ordinal(d.incidence_mask(0))
    row = maximin_paths(ss, d, [v1])[v1]
    assert row[v1] == math.inf
    assert row[ss.ordinal(0b0001)] == pytest.approx(0.5)
    # 去另一个分量必须经过空状态
    assert row[ss.ordinal(d.incidence_mask(1))] == 0.0


def test_partite_sets_k55(k55_space, k55_parts):
    tp = TrafficProfile.partite(k55_parts, 0.9)
    ps = partite_sets(k55_space, k55_parts, tp, 1.0, [0])
    assert ps.h_l == pytest.approx((0.2, 0.2))
    assert ps.h_star == pytest.approx(0.2)
    assert ps.h_star_min == pytest.approx(0.2)
    assert ps.m_values == (0.0, 0.0)


def test_partite_sets_uneven_components():
    g, ss, d, tp = _partite([3, 4], 0.9)
    ps = partite_sets(ss, d, tp, 1.0, [0], scan_min=False)
    assert ps.h_l == pytest.approx((1 / 3, 1 / 4))
    assert ps.h_star == pytest.approx(0.25)
    assert ps.h_star_min is None
    value, witness = h_star_min(ss, d, tp, 1.0)
    assert value == pytest.approx(0.25) and len(witness) == 1


def test_partite_sets_needs_single_component(k55_space, k55_parts):
    tp = TrafficProfile.partite(k55_parts, 0.9)
    with pytest.raises(DomainError):
        partite_sets(k55_space, k55_parts, tp, 1.0, [0, 5])


def test_thm4_recovers_thm2_exponent(k55_space, k55_parts):
    rho, gamma, zeta = 0.999, 0.1, 0.2
    tp = TrafficProfile.partite(k55_parts, rho)
    ps = partite_sets(k55_space, k55_parts, tp, 1.0, [0])
    r = thm4_bound(ps, k55_parts, tp, 1.0, [0], gamma, zeta)
    assert r.parameters["exponent"] == pytest.approx(4.0)
    rm = rho / 2
    expected = (math.log10(rm) + math.log10(0.6) + 8 * math.log10(rm) - 11 * math.log10(2.0)
                - 4 * math.log10(1 - rho))
    assert r.log10_value == pytest.approx(expected, rel=1e-12)


def test_thm4_precondition(k55_space, k55_parts):
    tp = TrafficProfile.partite(k55_parts, 0.9)
    ps = partite_sets(k55_space, k55_parts, tp, 1.0, [0])
    with pytest.raises(PreconditionError) as info:
        thm4_bound(ps, k55_parts, tp, 1.0, [0], 0.1, 0.2)
    assert info.value.context["required_rho"] == pytest.approx(rho_gamma(0.1, 0.2, 0.45))
    with pytest.raises(DomainError):
        thm4_bound(ps, k55_parts, tp, 1.0, [1], 0.1, 0.2)


def test_thm5(k55_space, k55_parts):
    rho = 0.999
    tp = TrafficProfile.partite(k55_parts, rho)
    ps = partite_sets(k55_space, k55_parts, tp, 1.0, [0])
    r = thm5_bound(ps, k55_parts, tp, 0.1, 0.05, 0.2)
    assert r.parameters["exponent"] == pytest.approx(4.0)
    assert r.log10_value > -math.inf and not r.vacuous
    no_scan = partite_sets(k55_space, k55_parts, tp, 1.0, [0], scan_min=False)
    with pytest.raises(DomainError):
        thm5_bound(no_scan, k55_parts, tp, 0.1, 0.05, 0.2)


# ---------- 引理诊断 ----------

@pytest.mark.parametrize("sigma", [50.0, 100.0, 400.0])
def test_lemma_diagnostics_pass_on_stable_heavy_load(k22, sigma):
    ss = enumerate_state_space(k22)
    d = partite_decomposition(k22)
    rho = 0.98
    tp = TrafficProfile.partite(d, rho)
    # 恰好让 ρ ≥ ρ_γ
    gamma = (1 - rho) / (0.5 * (rho / 2) ** 2) * (1 + 1e-9)
    dist = product_form(ss, FixedRates.from_sigma(sigma, n_nodes=4))
    report = lemma_diagnostics(dist, d, tp, gamma)
    assert report.stable
    assert report.skipped == ()
    names = {c.name for c in report.checks}
    assert {"component_ratio", "boundary_weight_1", "set_flow_2", "complete_flow_1"} <= names
    assert report.all_passed, report.failures()


def test_lemma_diagnostics_skip_unstable(k22):
    ss = enumerate_state_space(k22)
    d = partite_decomposition(k22)
    dist = product_form(ss, FixedRates.from_sigma(10.0, n_nodes=4))
    report = lemma_diagnostics(dist, d, TrafficProfile.partite(d, 0.98), 0.2)
    assert not report.stable
    assert report.checks == () and report.skipped == (("all", "unstable"),)


def test_lemma_diagnostics_low_load_skips_high_load_checks(k22):
    ss = enumerate_state_space(k22)
    d = partite_decomposition(k22)
    dist = product_form(ss, FixedRates.from_sigma(5.0, n_nodes=4))
    report = lemma_diagnostics(dist, d, TrafficProfile.partite(d, 0.5), 0.1)
    assert report.stable
    assert report.skipped[0][0] == "high_load"
    assert all(not c.name.startswith("set_") for c in report.checks)
