# tests/test_orchestrator.py
# -*- coding: utf-8 -*-

import math
import os

import pytest

from core import settings
from core.config_loader import load_config, parse_config
from core.errors import ResourceError
from core.orchestrator import ExperimentOrchestrator, run_config

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _rows(output, quantity, series=None):
    return [r for r in output.rows if r.quantity == quantity and (series is None or r.series == series)]


def _k22_config():
    return parse_config({
        "scenario": "k22",
        "topology": {"kind": "complete_partite", "sizes": [2, 2]},
        "traffic": {"mu": 1.0, "rho": [0.9]},
        "stationary": {"sigma": {"fit_margin": 0.02}, "mixing_epsilon": 0.05},
        "bounds": {
            "kinds": ["eq2", "lemma1", "prop1", "prop2", "thm2", "thm2_symmetric", "thm3", "thm4", "diagnostics"],
            "epsilon": 0.05,
            "gamma": 0.1,
        },
    })


def _sim_config():
    return parse_config({
        "scenario": "pair",
        "topology": {"kind": "line", "n": 2},
        "traffic": {"mu": 1.0, "rho": [0.2, 0.3]},
        "strategies": [{"kind": "fixed", "nu": 1.0, "label": "nu=1"}],
        "simulation": {
            "enabled": True, "seeds": [1, 2], "fc_clique": [0, 1], "little": True,
            "start_horizon": 200, "max_doublings": 1,
        },
    })


def test_minimal_scenario(tmp_path):
    output = run_config(os.path.join(BASE_DIR, "config", "scenarios", "minimal.yaml"), out_dir=str(tmp_path))
    theta = _rows(output, "theta", "node0")
    assert len(theta) == 1 and theta[0].value == pytest.approx(0.5)
    assert _rows(output, "log_z")[0].value == pytest.approx(math.log(2.0))
    margin = _rows(output, "stability_margin")[0]
    assert margin.value == pytest.approx(0.2) and margin.provenance == "stable"
    assert os.path.exists(output.files["results"])
    assert "simulations" not in output.files


def test_partite_bounds_at_heavy_load(tmp_path):
    output = ExperimentOrchestrator(_k22_config(), out_dir=str(tmp_path)).run(("stationary", "mixing", "bounds"))
    assert _rows(output, "bound_mixing_time", "thm3")[0].value == pytest.approx(0.354375)
    assert _rows(output, "bound_weighted_queue", "thm2")[0].value == pytest.approx(0.25 * 0.45 ** 3 * 0.9 * 10)
    per_node = _rows(output, "bound_per_node_queue", "thm2_per_node")[0].value
    assert _rows(output, "bound_aggregate_queue", "thm2_total")[0].value == pytest.approx(4 * per_node)
    assert len(_rows(output, "bound_activity_factor")) == 2
    # 拟合的 σ 让 θ = ρ_i + 0.02
    assert all(r.value == pytest.approx(0.47, abs=1e-6) for r in _rows(output, "theta"))
    # ρ = 0.9 低于 ρ_γ，thm4 跳过；prop2 与精确混合时间夹逼
    assert not _rows(output, "bound_weighted_queue", "thm4")
    t_mix = _rows(output, "t_mix")[0].value
    assert 0 < _rows(output, "bound_mixing_time", "prop2")[0].value < t_mix
    assert _rows(output, "lemma_checks", "failed")[0].value == 0
    assert os.path.exists(output.files["bounds"])


def test_simulation_rows(tmp_path):
    output = ExperimentOrchestrator(_sim_config(), out_dir=str(tmp_path)).run(("simulation",))
    sims = _rows(output, "sim_mean_total_queue", "nu=1")
    assert len(sims) == 4
    assert all(r.provenance.startswith("seed=") for r in sims)
    assert len(_rows(output, "sim_replication_mean")) == 2
    assert len(_rows(output, "fc_gap")) == 4
    assert len(_rows(output, "little_gap")) == 4
    assert len(_rows(output, "delay")) == 8
    header = open(output.files["simulations"], encoding="utf-8").readline().strip()
    assert header.startswith("scenario,rho,strategy,seed,horizon")


def test_reruns_are_byte_identical(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    out_a = ExperimentOrchestrator(_sim_config(), out_dir=str(a)).run()
    ExperimentOrchestrator(_sim_config(), out_dir=str(b)).run()
    ExperimentOrchestrator(_sim_config(), out_dir=str(c), threads=2).run()
    for kind, path in out_a.files.items():
        name = os.path.basename(path)
        data = (a / name).read_bytes()
        assert data == (b / name).read_bytes(), kind
        assert data == (c / name).read_bytes(), kind


def test_seed_override_and_scale():
    orch = ExperimentOrchestrator(_sim_config(), seed=5, scale="desk")
    assert orch.config.seeds == (5,)
    protocol = orch.protocol()
    assert protocol["start_horizon"] == 250000
    assert protocol["horizon_cap"] == 4000000
    assert protocol["max_doublings"] == 1


def test_mixing_subcommand_always_computes(tmp_path):
    cfg = load_config(os.path.join(BASE_DIR, "config", "scenarios", "minimal.yaml"))
    output = ExperimentOrchestrator(cfg, out_dir=str(tmp_path)).run(("mixing",))
    assert [r.series for r in output.rows] == ["epsilon=0.05"]
    assert output.rows[0].value > 0


def test_overrides_do_not_leak_between_runs(tmp_path):
    data = {
        "topology": {"kind": "complete_partite", "sizes": [2, 2]},
        "traffic": {"mu": 1.0, "rho": [0.2]},
        "stationary": {"sigma": 1.0},
    }
    tight = parse_config({**data, "caps": {"exact_mixing": 3}})
    with pytest.raises(ResourceError):
        ExperimentOrchestrator(tight, out_dir=str(tmp_path / "a")).run(("mixing",))
    assert settings.cap("exact_mixing") == 4096
    output = ExperimentOrchestrator(parse_config(data), out_dir=str(tmp_path / "b")).run(("mixing",))
    assert output.rows[0].value > 0


def test_overrides_replace_instead_of_stacking():
    previous = settings.apply_overrides({"caps": {"queue": 5}})
    settings.apply_overrides({"tolerances": {"mixing_rel": 0.5}})
    assert settings.cap("queue") == 1_000_000_000
    assert settings.tolerance("mixing_rel") == 0.5
    settings.restore_overrides(previous)
    assert settings.tolerance("mixing_rel") == 0.01
