# core/settings.py
# -*- coding: utf-8 -*-

from __future__ import annotations

import copy
import logging
import os
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

import yaml

logger = logging.getLogger(__name__)

_BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_SETTINGS_PATH = os.path.join(_BASE_DIR, "config", "settings.yaml")

# config/settings.yaml 丢失时的兜底（和 yaml 文件保持一致）
_BUILTIN: Dict[str, Any] = {
    "caps": {
        "state_space": 5_000_000,
        "dense_solve": 20_000,
        "exact_mixing": 4096,
        "queue": 1_000_000_000,
    },
    "tolerances": {
        "probability_sum": 1e-12,
        "detailed_balance": 1e-12,
        "inverse_rel": 1e-10,
        "poisson_tail": 1e-12,
        "mixing_rel": 0.01,
        "solver_residual": 1e-9,
    },
    "probe": {"grid_points": 64, "x_min": 1e-3, "x_max": 1e6},
    "protocol": {"start_horizon": 1_000_000, "acceptance": 0.05, "max_doublings": 6},
    "scales": {
        "desk": {"start_horizon": 250_000, "horizon_cap": 4_000_000, "rho_step": 0.1, "tolerance_sim": 0.15},
        "full": {"start_horizon": 1_000_000, "horizon_cap": 64_000_000, "rho_step": 0.01, "tolerance_sim": 0.10},
    },
    "comparison": {"bound_rel": 1e-6},
    "logging": {"level": "INFO", "log_dir": "data/logs"},
}

_cache: Optional[Dict[str, Any]] = None
# 当前生效的实验覆盖（总是从 _cache 合并出来，不叠加）
_active: Optional[Dict[str, Any]] = None


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_settings(path: Optional[str] = None, reload: bool = False) -> Dict[str, Any]:
    """
    读取 settings.yaml 并和内置默认合并。

    - 默认只读一次，后续走缓存；有实验覆盖时返回合并后的设置；
    - reload 同时清掉实验覆盖；
    - 文件不存在或解析失败时退回内置默认（记一条 WARNING，不中断）。
    """
    global _cache, _active
    if _cache is not None and not reload and path is None:
        return _active if _active is not None else _cache

    target = path or DEFAULT_SETTINGS_PATH
    data: Dict[str, Any] = {}
    if os.path.exists(target):
        try:
            with open(target, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            logger.warning("[Settings] settings.yaml 解析失败，使用内置默认: %s", e)
            data = {}
    else:
        logger.warning("[Settings] 没找到 %s，使用内置默认", target)

    merged = _deep_merge(_BUILTIN, data)
    if path is None:
        _cache = merged
        _active = None
    return merged


def get(section: str, key: str, overrides: Optional[Dict[str, Any]] = None) -> Any:
    """取某一项默认值；overrides 是实验配置里同名 section 的覆盖。"""
    if overrides and key in overrides:
        return overrides[key]
    return load_settings()[section][key]


def cap(name: str, overrides: Optional[Dict[str, Any]] = None) -> int:
    return int(get("caps", name, overrides))


def tolerance(name: str, overrides: Optional[Dict[str, Any]] = None) -> float:
    return float(get("tolerances", name, overrides))


def scale(name: str) -> Dict[str, Any]:
    return dict(load_settings()["scales"][name])


def apply_overrides(overrides: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    """
    把实验配置里的 caps / tolerances 等段合并到 settings.yaml 的默认之上，替换掉之前的覆盖。
    返回之前生效的覆盖结果，交给 restore_overrides 还原。
    """
    global _active
    previous = _active
    base = load_settings() if _cache is None else _cache
    _active = _deep_merge(base, overrides) if overrides else None
    if overrides:
        logger.debug("[Settings] 应用覆盖: %s", sorted(overrides))
    return previous


def restore_overrides(previous: Optional[Dict[str, Any]]):
    global _active
    _active = previous


@contextmanager
def overridden(overrides: Optional[Dict[str, Any]]) -> Iterator[Dict[str, Any]]:
    """with 块内使用实验覆盖，退出时还原（进程池的子进程里同样适用）。"""
    previous = apply_overrides(overrides)
    try:
        yield load_settings()
    finally:
        restore_overrides(previous)
