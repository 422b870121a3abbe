# tests/test_cli.py
# -*- coding: utf-8 -*-

import os

import pytest

from main import main

K55 = "topology:\n  kind: complete_partite\n  sizes: [5, 5]\n"


def test_describe_k55(tmp_path, capsys):
    cfg = tmp_path / "k55.yaml"
    cfg.write_text(K55, encoding="utf-8")
    assert main(["describe", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    text = capsys.readouterr().out
    assert "N = 10" in text
    assert "|Ω| = 63" in text
    assert "ζ = 1/5" in text
    assert os.path.exists(tmp_path / "out" / "k55_adjacency.txt")


def test_bad_config_exits_with_one(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(K55 + "traffic:\n  mu: 1.0\n  rho: [1.5]\nstationary:\n  sigma: 1.0\n", encoding="utf-8")
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_run_prints_written_files(tmp_path, capsys):
    base = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    cfg = os.path.join(base, "config", "scenarios", "minimal.yaml")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "results:" in capsys.readouterr().out


def test_unknown_figure_is_rejected():
    with pytest.raises(SystemExit):
        main(["reproduce", "fig9"])


def test_missing_bound_option_exits_with_one(tmp_path):
    cfg = tmp_path / "convex.yaml"
    cfg.write_text(
        "topology: {kind: complete_partite, sizes: [2, 2]}\n"
        "traffic: {mu: 1.0, rho: [0.5]}\n"
        "strategies:\n  - {kind: queue_based, family: {kind: loglog}}\n"
        "bounds: {kinds: [thm1_convex]}\n",
        encoding="utf-8",
    )
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1
    assert not os.path.exists(tmp_path / "out")
