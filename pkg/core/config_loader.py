# core/config_loader.py
# -*- coding: utf-8 -*-
"""
实验配置（YAML）→ ExperimentConfig。

约定：
- 物理速率不给默认值：traffic.mu、负载 rho、固定策略的 nu 都必须写明；
- caps / tolerances / protocol 缺省取 config/settings.yaml；
- 校验失败抛 ConfigError，带字段路径（如 traffic.rho[2]）和 YAML 行号。

配置示例见 config/scenarios/*.yaml。
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from core.errors import ConfigError, CsmaError
from bounds.rate_functions import RateFunctionFamily
from simulator.strategy import Strategy
from topology.cliques import is_clique
from topology.graph import InterferenceGraph, build_topology
from topology.partite import PartiteDecomposition, partite_decomposition

logger = logging.getLogger(__name__)

BOUND_NAMES = (
    "eq2", "lemma1", "thm1_concave", "thm1_convex", "thm1_h", "thm1_h_cover",
    "prop1", "prop2", "thm2", "thm2_symmetric", "thm3", "thm4", "thm5", "example1", "diagnostics",
)
RATE_BOUNDS = ("prop1", "prop2", "example1", "diagnostics")
FAMILY_BOUNDS = ("thm1_concave", "thm1_convex", "thm1_h", "thm1_h_cover")
TOP_LEVEL_KEYS = (
    "scenario", "topology", "traffic", "stationary", "strategies", "bounds",
    "simulation", "output", "caps", "tolerances", "protocol",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    一份实验配置。rhos 是总负载的扫描点；traffic_mode:
        partite   ρ̂_k = ρ·split_k，分量内每个节点 ρ_i = ρ̂_k
        per_node  每个节点 ρ_i = ρ
    """

    scenario: str
    topology: Dict[str, Any]
    rhos: Tuple[float, ...]
    mu: float
    traffic_mode: str = "partite"
    split: Optional[Tuple[float, ...]] = None
    components: Optional[Tuple[Tuple[int, ...], ...]] = None
    stationary: Dict[str, Any] = field(default_factory=dict)
    strategies: Tuple[Strategy, ...] = ()
    bounds: Tuple[str, ...] = ()
    bound_options: Dict[str, Any] = field(default_factory=dict)
    simulation: Dict[str, Any] = field(default_factory=dict)
    seeds: Tuple[int, ...] = (1,)
    output_dir: str = "out"
    overrides: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    source: str = ""

    @property
    def simulate(self) -> bool:
        return bool(self.simulation.get("enabled", False))

    def graph(self) -> InterferenceGraph:
        return build_topology(self.topology)

    def decomposition(self, graph: Optional[InterferenceGraph] = None) -> Optional[PartiteDecomposition]:
        if self.traffic_mode != "partite":
            return None
        g = graph or self.graph()
        comps = [list(c) for c in self.components] if self.components else None
        return partite_decomposition(g, comps)


# === 行号 ===

def _line_map(node, path: str = "", out: Optional[Dict[str, int]] = None) -> Dict[str, int]:
    """遍历 yaml.compose 的节点树，记录每个字段路径的起始行号（从 1 开始）。"""
    out = {} if out is None else out
    if node is None:
        return out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            child = f"{path}.{key_node.value}" if path else str(key_node.value)
            out[child] = key_node.start_mark.line + 1
            _line_map(value_node, child, out)
    elif isinstance(node, yaml.SequenceNode):
        for k, item in enumerate(node.value):
            _line_map(item, f"{path}[{k}]", out)
    return out


class _Parser:
    def __init__(self, data: Dict[str, Any], lines: Dict[str, int]):
        self.data = data
        self.lines = lines

    def fail(self, message: str, path: str):
        line = None
        probe = path
        while probe and line is None:
            line = self.lines.get(probe)
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        raise ConfigError(message, field=path, line=line)

    def section(self, key: str, required: bool = False) -> Dict[str, Any]:
        value = self.data.get(key)
        if value is None:
            if required:
                self.fail(f"缺少必填段 {key}", key)
            return {}
        if not isinstance(value, dict):
            self.fail(f"{key} 必须是映射", key)
        return value

    def number(self, value: Any, path: str, positive: bool = False) -> float:
        if isinstance(value, bool):
            self.fail("需要数值", path)
        try:
            x = float(value)
        except (TypeError, ValueError):
            self.fail(f"需要数值，得到 {value!r}", path)
        if not np.isfinite(x) or (positive and x <= 0):
            self.fail("需要有限的正数" if positive else "需要有限数值", path)
        return x

    def node_list(self, value: Any, path: str, n_nodes: int) -> Tuple[int, ...]:
        if not isinstance(value, (list, tuple)) or not value:
            self.fail("需要非空的节点编号列表", path)
        out = []
        for k, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, int) or not (0 <= v < n_nodes):
                self.fail(f"节点编号必须是 0..{n_nodes - 1} 的整数", f"{path}[{k}]")
            out.append(int(v))
        return tuple(out)


def _rho_values(p: _Parser, traffic: Dict[str, Any]) -> Tuple[float, ...]:
    raw = traffic.get("rho")
    if raw is None:
        p.fail("必须给出负载 rho（列表或 start/stop/step）", "traffic.rho")
    if isinstance(raw, dict):
        start = p.number(raw.get("start"), "traffic.rho.start")
        stop = p.number(raw.get("stop"), "traffic.rho.stop")
        step = p.number(raw.get("step"), "traffic.rho.step", positive=True)
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + k * step, 12) for k in range(max(count, 0))]
    elif isinstance(raw, (list, tuple)):
        values = [p.number(v, f"traffic.rho[{k}]") for k, v in enumerate(raw)]
    else:
        values = [p.number(raw, "traffic.rho")]
    if not values:
        p.fail("负载扫描点为空", "traffic.rho")
    for k, v in enumerate(values):
        if not (0.0 <= v < 1.0):
            p.fail(f"负载必须在 [0, 1)，得到 {v}", f"traffic.rho[{k}]")
    return tuple(values)


def _check_bound_options(
    p: _Parser,
    opts: Dict[str, Any],
    kinds: List[str],
    strategies: List[Strategy],
    graph: InterferenceGraph,
    d: Optional[PartiteDecomposition],
):
    """下界选项之间的依赖在读配置时查完；运行时只剩“在这个 ρ 下不适用”的情况。"""
    n = graph.n_nodes

    if "family" in opts:
        if not isinstance(opts["family"], dict):
            p.fail("bounds.family 必须是映射", "bounds.family")
        try:
            RateFunctionFamily.from_config(opts["family"])
        except KeyError as e:
            p.fail(f"缺少字段 {e.args[0]}", "bounds.family")
        except CsmaError as e:
            p.fail(f"速率函数族非法：{e}", "bounds.family")
    has_family = "family" in opts or any(s.kind == "queue_based" for s in strategies)
    for k, name in enumerate(kinds):
        if name in FAMILY_BOUNDS and not has_family:
            p.fail(f"{name} 需要速率函数族（bounds.family 或一个 queue_based 策略）", f"bounds.kinds[{k}]")
    if "thm1_convex" in kinds and "xi" not in opts:
        p.fail("thm1_convex 需要显式的 bounds.xi（f 的上界）", "bounds.xi")

    if "clique" in opts:
        opts["clique"] = p.node_list(opts["clique"], "bounds.clique", n)
        if not is_clique(graph, opts["clique"]):
            p.fail("bounds.clique 必须是干扰图里的团", "bounds.clique")
    if "xi" in opts:
        raw = opts["xi"]
        values = raw if isinstance(raw, list) else [raw]
        values = [p.number(v, f"bounds.xi[{k}]" if isinstance(raw, list) else "bounds.xi", positive=True)
                  for k, v in enumerate(values)]
        sizes = {1, n} | ({len(opts["clique"])} if "clique" in opts else set())
        if len(values) not in sizes:
            p.fail("xi 的长度必须是 1、团大小或节点数", "bounds.xi")
        opts["xi"] = values if isinstance(raw, list) else values[0]

    if "S" in opts:
        opts["S"] = p.node_list(opts["S"], "bounds.S", n)
        if d is not None and any(name in ("thm2", "thm4", "thm5") for name in kinds):
            if len({d.component_of(i) for i in opts["S"]}) != 1:
                p.fail("S 必须落在同一个分量内", "bounds.S")

    weights = opts.get("weights")
    if isinstance(weights, list):
        if len(weights) != n:
            p.fail(f"weights 长度必须等于节点数 {n}", "bounds.weights")
        opts["weights"] = [p.number(w, f"bounds.weights[{k}]") for k, w in enumerate(weights)]
        if any(w < 0 for w in opts["weights"]):
            p.fail("weights 必须非负", "bounds.weights")
    elif weights is not None:
        opts["weights"] = p.number(weights, "bounds.weights")
        if opts["weights"] < 0:
            p.fail("weights 必须非负", "bounds.weights")

    for key in ("epsilon", "gamma"):
        if key in opts:
            opts[key] = p.number(opts[key], f"bounds.{key}", positive=True)
    if opts.get("epsilon", 0.0) >= 0.5:
        p.fail("epsilon 必须在 (0, 1/2)", "bounds.epsilon")

    candidates = opts.get("candidates") or []
    if not isinstance(candidates, list):
        p.fail("candidates 必须是列表", "bounds.candidates")
    for k, cand in enumerate(candidates):
        path = f"bounds.candidates[{k}]"
        if not isinstance(cand, dict):
            p.fail("候选子集必须是映射", path)
        if "active_any" in cand:
            p.node_list(cand["active_any"], f"{path}.active_any", n)
        elif "states" in cand:
            states = cand["states"]
            if not isinstance(states, list) or not states:
                p.fail("states 必须是非空的 bit 串列表", f"{path}.states")
            for j, bits in enumerate(states):
                bits = str(bits)
                if len(bits) != n or set(bits) - {"0", "1"}:
                    p.fail(f"状态必须是长度 {n} 的 0/1 串", f"{path}.states[{j}]")
                ones = [i for i, ch in enumerate(bits) if ch == "1"]
                if any(graph.has_edge(a, b) for x, a in enumerate(ones) for b in ones[x + 1:]):
                    p.fail(f"状态 {bits} 不是独立集", f"{path}.states[{j}]")
        else:
            p.fail("候选子集需要 active_any 或 states", path)


def parse_config(data: Dict[str, Any], lines: Optional[Dict[str, int]] = None, source: str = "") -> ExperimentConfig:
    """把已经读成 dict 的配置校验并转换成 ExperimentConfig。"""
    if not isinstance(data, dict):
        raise ConfigError("配置顶层必须是映射")
    p = _Parser(data, lines or {})
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            p.fail(f"未知字段 {key}", str(key))

    scenario = str(data.get("scenario") or os.path.splitext(os.path.basename(source))[0] or "scenario")

    topo = p.section("topology", required=True)
    try:
        graph = build_topology(topo)
    except CsmaError as e:
        p.fail(f"拓扑描述非法：{e}", "topology")
    n = graph.n_nodes

    traffic = p.section("traffic", required=True)
    if "mu" not in traffic:
        p.fail("必须显式给出服务率 mu", "traffic.mu")
    mu = p.number(traffic["mu"], "traffic.mu", positive=True)
    rhos = _rho_values(p, traffic)
    mode = str(traffic.get("mode", "partite" if topo.get("kind") in ("complete_partite", "grid") else "per_node"))
    if mode not in ("partite", "per_node"):
        p.fail("traffic.mode 只能是 partite 或 per_node", "traffic.mode")

    components = None
    if "components" in traffic:
        raw = traffic["components"]
        if not isinstance(raw, list):
            p.fail("components 必须是节点列表的列表", "traffic.components")
        components = tuple(p.node_list(c, f"traffic.components[{k}]", n) for k, c in enumerate(raw))

    split = None
    d = None
    if mode == "partite":
        try:
            d = partite_decomposition(graph, [list(c) for c in components] if components else None)
        except CsmaError as e:
            p.fail(f"无法做多部分解：{e}", "traffic.components" if components else "topology")
        if "split" in traffic:
            raw = traffic["split"]
            if not isinstance(raw, list) or len(raw) != d.K:
                p.fail(f"split 长度必须等于分量数 K={d.K}", "traffic.split")
            split = tuple(p.number(v, f"traffic.split[{k}]") for k, v in enumerate(raw))
            if any(v < 0 for v in split) or abs(sum(split) - 1.0) > 1e-12:
                p.fail("split 必须非负且和为 1", "traffic.split")

    stationary = dict(p.section("stationary"))
    if stationary:
        sigma = stationary.get("sigma")
        if isinstance(sigma, list) and len(sigma) != n:
            p.fail(f"sigma 长度必须等于节点数 {n}", "stationary.sigma")
        if isinstance(sigma, dict) and "fit_margin" not in sigma:
            p.fail("sigma 映射只支持 fit_margin", "stationary.sigma")
        if "mixing_epsilon" in stationary:
            eps = p.number(stationary["mixing_epsilon"], "stationary.mixing_epsilon", positive=True)
            if eps >= 0.5:
                p.fail("mixing_epsilon 必须在 (0, 1/2)", "stationary.mixing_epsilon")

    strategies: List[Strategy] = []
    raw_strategies = data.get("strategies") or []
    if not isinstance(raw_strategies, list):
        p.fail("strategies 必须是列表", "strategies")
    for k, spec in enumerate(raw_strategies):
        path = f"strategies[{k}]"
        if not isinstance(spec, dict):
            p.fail("策略必须是映射", path)
        if spec.get("kind") == "fixed" and "nu" not in spec:
            p.fail("固定速率策略必须显式给出 nu", f"{path}.nu")
        try:
            strategies.append(Strategy.from_config(spec))
        except KeyError as e:
            p.fail(f"缺少字段 {e.args[0]}", path)
        except CsmaError as e:
            p.fail(f"策略非法：{e}", path)

    bounds_sec = dict(p.section("bounds"))
    kinds = bounds_sec.pop("kinds", []) or []
    if not isinstance(kinds, list):
        p.fail("bounds.kinds 必须是列表", "bounds.kinds")
    for k, name in enumerate(kinds):
        if name not in BOUND_NAMES:
            p.fail(f"未知的下界 {name}", f"bounds.kinds[{k}]")
        if name in ("thm2", "thm2_symmetric", "thm3", "thm4", "thm5", "diagnostics") and d is None:
            p.fail(f"{name} 需要多部分解（traffic.mode = partite）", f"bounds.kinds[{k}]")
    has_rates = "sigma" in stationary or any(s.kind == "fixed" for s in strategies)
    for k, name in enumerate(kinds):
        if name in RATE_BOUNDS and not has_rates:
            p.fail(f"{name} 需要固定速率（stationary.sigma 或一个 fixed 策略）", f"bounds.kinds[{k}]")
    _check_bound_options(p, bounds_sec, kinds, strategies, graph, d)

    simulation = dict(p.section("simulation"))
    seeds = simulation.get("seeds", [1])
    if not isinstance(seeds, list) or not seeds or any(isinstance(s, bool) or not isinstance(s, int) for s in seeds):
        p.fail("seeds 必须是非空整数列表", "simulation.seeds")
    if simulation.get("enabled") and not strategies:
        p.fail("开启仿真时至少需要一个策略", "strategies")
    if "fc_clique" in simulation:
        simulation["fc_clique"] = p.node_list(simulation["fc_clique"], "simulation.fc_clique", n)
        if not is_clique(graph, simulation["fc_clique"]):
            p.fail("fc_clique 必须是干扰图里的团", "simulation.fc_clique")

    if not (stationary or kinds or simulation.get("enabled")):
        p.fail("stationary / bounds / simulation 至少要开启一项", "")

    output = p.section("output")
    overrides = {}
    for key in ("caps", "tolerances", "protocol"):
        if key in data:
            overrides[key] = dict(p.section(key))

    return ExperimentConfig(
        scenario=scenario,
        topology=dict(topo),
        rhos=rhos,
        mu=mu,
        traffic_mode=mode,
        split=split,
        components=components,
        stationary=stationary,
        strategies=tuple(strategies),
        bounds=tuple(kinds),
        bound_options=bounds_sec,
        simulation=simulation,
        seeds=tuple(int(s) for s in seeds),
        output_dir=str(output.get("dir", "out")),
        overrides=overrides,
        source=source,
    )


def _read_yaml(path: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    if not os.path.exists(path):
        raise ConfigError(f"配置文件不存在: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = yaml.safe_load(text)
        lines = _line_map(yaml.compose(text))
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(f"YAML 解析失败: {e.problem}", line=line)
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML 解析失败: {e}")
    return data or {}, lines


def load_config(path: str) -> ExperimentConfig:
    data, lines = _read_yaml(path)
    cfg = parse_config(data, lines, source=path)
    logger.info("[Config] 读取 %s：场景 %s，%d 个负载点", path, cfg.scenario, len(cfg.rhos))
    return cfg


def load_topology(path: str) -> Tuple[Dict[str, Any], Optional[List[List[int]]]]:
    """describe 只需要拓扑（和可选的 traffic.components），不要求配置的其余部分完整。"""
    data, lines = _read_yaml(path)
    if not isinstance(data, dict):
        raise ConfigError("配置顶层必须是映射")
    p = _Parser(data, lines)
    topo = dict(p.section("topology", required=True))
    traffic = data.get("traffic") or {}
    comps = traffic.get("components") if isinstance(traffic, dict) else None
    if comps is not None and not isinstance(comps, list):
        p.fail("components 必须是节点列表的列表", "traffic.components")
    return topo, [list(c) for c in comps] if comps else None
