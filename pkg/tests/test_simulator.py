# tests/test_simulator.py
# -*- coding: utf-8 -*-

import csv

import pytest

from core.errors import ContractError, DomainError, UnavailableError
from bounds.queue_based import clique_load_bound
from bounds.rate_functions import RateFunctionFamily
from bounds.reports import TrafficProfile
from simulator.checks import fuhrmann_cooper_check, fuhrmann_cooper_from_estimate, little_check, occupancy_distance
from simulator.engine import EVENT_LOG_COLUMNS, simulate
from simulator.estimation import estimate_mean_queue, replicate_mean_queue
from simulator.strategy import Strategy
from stationary.distribution import product_form
from stationary.rates import FixedRates
from topology.cliques import clique_cover
from topology.graph import build_topology
from topology.state_space import enumerate_state_space


@pytest.fixture
def single():
    return build_topology({"kind": "line", "n": 1})


@pytest.fixture
def pair():
    return build_topology({"kind": "line", "n": 2})


# ---------- 策略 ----------

def test_fixed_strategy():
    s = Strategy.fixed(2.0, 0.5)
    assert s.activation_rate(0, 0) == 2.0 and s.activation_rate(3, 17) == 2.0
    assert s.deactivation_rate(0, 5) == 0.5
    assert s.describe() == "fixed(nu=2)"
    rates = s.fixed_rates(3)
    assert rates.sigma.tolist() == [4.0, 4.0, 4.0]


def test_strategy_validation():
    with pytest.raises(DomainError):
        Strategy("fixed", (RateFunctionFamily.loglog(),))
    with pytest.raises(DomainError):
        Strategy("fixed", (RateFunctionFamily.fixed(1.0),), dummy_packets=False)
    with pytest.raises(DomainError):
        Strategy("csma", (RateFunctionFamily.fixed(1.0),))
    with pytest.raises(DomainError):
        Strategy.queue_based(RateFunctionFamily.loglog()).fixed_rates(2)


def test_queue_based_without_dummy_packets():
    s = Strategy.queue_based(RateFunctionFamily.polynomial(1.0, 1.0), dummy_packets=False, label="f=x;g=1")
    assert s.activation_rate(0, 0) == 0.0
    assert s.activation_rate(0, 3) == 3.0
    assert s.describe() == "f=x;g=1"


def test_strategy_from_config():
    s = Strategy.from_config({"kind": "queue_based", "family": {"kind": "loglog"}})
    assert s.kind == "queue_based" and s.rule(4).kind == "loglog"
    p = Strategy.from_config({"kind": "probabilities", "family": {"kind": "loglog"}, "nu": 3.0})
    assert p.activation_rate(0, 0) == 0.0
    assert p.deactivation_rate(0, 0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        Strategy.from_config({"kind": "aloha"})


def test_probabilities_must_be_in_unit_interval():
    with pytest.raises(ContractError):
        Strategy.from_probabilities(RateFunctionFamily.polynomial(1.0, 1.0), nu=1.0)


def test_strategy_check_against_service_rate():
    tp = TrafficProfile.from_loads([0.2, 0.2])
    with pytest.raises(ContractError):
        Strategy.fixed(1.0, 2.0).check(tp)
    per_node = Strategy.from_fixed_rates(FixedRates.from_sigma([1.0, 2.0, 3.0]))
    with pytest.raises(DomainError):
        per_node.check(tp)


# ---------- 引擎 ----------

def test_same_seed_same_trajectory(pair):
    tp = TrafficProfile.from_loads([0.2, 0.2])
    a = simulate(pair, tp, Strategy.fixed(1.0), 2000.0, seed=11)
    b = simulate(pair, tp, Strategy.fixed(1.0), 2000.0, seed=11)
    c = simulate(pair, tp, Strategy.fixed(1.0), 2000.0, seed=12)
    assert a.events == b.events
    assert a.per_node_means == b.per_node_means
    assert a.theta_hat == b.theta_hat
    assert a.per_node_means != c.per_node_means


def test_nearly_always_active_node_is_mm1(single):
    # ν 很大、去激活极少：节点几乎一直在服务，退化成 M/M/1
    tp = TrafficProfile.from_loads([0.5])
    stats = simulate(single, tp, Strategy.fixed(1e6, 1e-6), 2e5, seed=3)
    assert stats.mean_total_queue == pytest.approx(1.0, rel=0.1)
    assert stats.theta_hat[0] > 0.999


def test_event_log_and_feasibility(tmp_path, k22):
    path = tmp_path / "events.csv"
    tp = TrafficProfile.from_loads([0.1] * 4)
    stats = simulate(k22, tp, Strategy.fixed(1.0), 200.0, seed=5, debug=True, event_log=str(path))
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == EVENT_LOG_COLUMNS
    assert len(rows) > stats.events
    for row in rows[1:]:
        bits = row[4]
        # 同一分量内可以同时激活，跨分量不行
        assert not ("1" in bits[:2] and "1" in bits[2:])


def test_horizon_must_be_positive(pair):
    with pytest.raises(DomainError):
        simulate(pair, TrafficProfile.from_loads([0.1, 0.1]), Strategy.fixed(1.0), 0.0, seed=1)


def test_traffic_must_match_graph(pair):
    with pytest.raises(DomainError):
        simulate(pair, TrafficProfile.from_loads([0.1]), Strategy.fixed(1.0), 10.0, seed=1)


# ---------- 估计协议 ----------

def test_activity_only_process_matches_product_form(k22):
    tp = TrafficProfile.from_loads([0.0] * 4)
    est = estimate_mean_queue(k22, tp, Strategy.fixed(1.0), seed=9, start_horizon=10000.0)
    assert est.converged and est.mean_total_queue == 0.0
    dist = product_form(enumerate_state_space(k22), FixedRates.from_sigma(1.0, n_nodes=4))
    assert occupancy_distance(est, dist) < 0.05
    assert list(est.theta_hat) == pytest.approx([2 / 7] * 4, abs=0.02)


def test_runaway_is_reported_as_unstable(pair):
    tp = TrafficProfile.from_loads([0.6, 0.6])
    est = estimate_mean_queue(pair, tp, Strategy.fixed(1.0), seed=2, start_horizon=1000.0, queue_cap=50)
    assert est.unstable and not est.converged
    assert est.as_row()["unstable"] is True


def test_doubling_budget_exhausted(pair):
    tp = TrafficProfile.from_loads([0.2, 0.2])
    est = estimate_mean_queue(pair, tp, Strategy.fixed(1.0), seed=4, start_horizon=100.0,
                              max_doublings=0, acceptance=1e-9)
    assert not est.converged and est.doublings == 0
    assert est.horizon_used == pytest.approx(200.0)
    assert est.relative_gap > 1e-9


def test_protocol_arguments_are_validated(pair):
    tp = TrafficProfile.from_loads([0.2, 0.2])
    with pytest.raises(DomainError):
        estimate_mean_queue(pair, tp, Strategy.fixed(1.0), seed=1, start_horizon=0.0)
    with pytest.raises(DomainError):
        estimate_mean_queue(pair, tp, Strategy.fixed(1.0), seed=1, start_horizon=10.0, acceptance=1.5)


def test_replication_summary(pair):
    tp = TrafficProfile.from_loads([0.1, 0.1])
    summary = replicate_mean_queue(pair, tp, Strategy.fixed(1.0), [1, 2, 3], nodes=[0],
                                   start_horizon=500.0, max_doublings=0)
    assert len(summary.estimates) == 3
    assert summary.stderr >= 0.0
    assert [e.seed for e in summary.estimates] == [1, 2, 3]
    with pytest.raises(DomainError):
        replicate_mean_queue(pair, tp, Strategy.fixed(1.0), [])


# ---------- 恒等式核对 ----------

def test_little_on_mm1(single):
    tp = TrafficProfile.from_loads([0.5])
    est = estimate_mean_queue(single, tp, Strategy.fixed(1e6, 1e-6), seed=8, start_horizon=1e5, max_doublings=0)
    report = little_check(est, tp)
    assert report.passed, (report.lhs, report.rhs)


def test_little_needs_sojourn_tracking(pair):
    tp = TrafficProfile.from_loads([0.1, 0.1])
    est = estimate_mean_queue(pair, tp, Strategy.fixed(1.0), seed=1, start_horizon=100.0,
                              max_doublings=0, track_sojourn=False)
    with pytest.raises(UnavailableError):
        little_check(est, tp)


def test_fc_needs_tracked_clique(pair):
    tp = TrafficProfile.from_loads([0.1, 0.1])
    est = estimate_mean_queue(pair, tp, Strategy.fixed(1.0), seed=1, start_horizon=100.0, max_doublings=0)
    with pytest.raises(UnavailableError):
        fuhrmann_cooper_from_estimate(est, tp, [0, 1])
    with pytest.raises(DomainError):
        fuhrmann_cooper_check(build_topology({"kind": "line", "n": 3}), TrafficProfile.from_loads([0.1] * 3),
                              Strategy.fixed(1.0), [0, 2], seed=1)


def test_fc_with_no_arrivals_is_trivial(pair):
    report = fuhrmann_cooper_check(pair, TrafficProfile.from_loads([0.0, 0.0]), Strategy.fixed(1.0), [0, 1], seed=1)
    assert report.passed and report.lhs == 0.0


@pytest.mark.slow
def test_fc_decomposition_on_a_single_edge(pair):
    tp = TrafficProfile.from_loads([0.2, 0.2])
    report = fuhrmann_cooper_check(pair, tp, Strategy.fixed(1.0), [0, 1], seed=20240601,
                                   start_horizon=2e5, max_doublings=2)
    assert report.passed, (report.lhs, report.rhs)
    assert report.queueing_term == pytest.approx(0.4 * 0.4 / 0.6)


@pytest.mark.slow
def test_simulated_queue_respects_clique_bounds(k55):
    rho = 0.5
    tp = TrafficProfile.from_loads([rho / 2] * 10)
    est = estimate_mean_queue(k55, tp, Strategy.fixed(5.0), seed=20240601, start_horizon=1e5, horizon_cap=1.6e6)
    cover_total = sum(clique_load_bound(tp, c).value for c in clique_cover(k55))
    assert cover_total == pytest.approx(5.0)
    assert est.mean_total_queue >= cover_total
