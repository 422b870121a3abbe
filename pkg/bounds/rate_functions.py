# bounds/rate_functions.py
# -*- coding: utf-8 -*-
"""
队列相关的激活 / 去激活函数族 f, g 及 h = f / g。

- 所有族都是可 pickle 的 frozen dataclass（进程池要用），不用 lambda；
- 反函数一律数值求：从 [0, 1] 出发几何扩张区间，再二分到相对 1e-10；
- 单调性 / 凹凸性只在探测网格上检查（64 个对数均匀点的中点不等式），不证明。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from core import settings
from core.errors import ContractError, DomainError, InverseError, InverseOverflowError

logger = logging.getLogger(__name__)

SUPPORTED_FAMILIES = ("fixed", "loglog", "polynomial", "logarithmic", "tabulated")

# 扩张区间的上限，超过视为无法求逆
_BRACKET_LIMIT = 1e300


@dataclass(frozen=True)
class RateFunctionFamily:
    """
    kind:
        fixed(nu, mu_deact)        f ≡ nu，g ≡ mu_deact
        loglog()                   r = log(x+1)，f = r/(1+r)，g = 1/(1+r)，h = r
        polynomial(a, c)           f = x^a，g ≡ c
        logarithmic(c)             f = log(x+1)，g ≡ c
        tabulated(xs, f, g)        分段线性插值，区间外取端点值
    """

    kind: str
    params: Tuple[Tuple[str, object], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in SUPPORTED_FAMILIES:
            raise DomainError(f"未知的速率函数族 {self.kind}", supported=SUPPORTED_FAMILIES)
        p = self.param_dict
        if self.kind == "fixed":
            if float(p.get("nu", 0)) <= 0 or float(p.get("mu_deact", 1.0)) <= 0:
                raise DomainError("fixed 族的 nu / mu_deact 必须为正")
        elif self.kind == "polynomial":
            if float(p.get("a", 1.0)) < 0 or float(p.get("c", 1.0)) <= 0:
                raise DomainError("polynomial 族要求 a ≥ 0、c > 0")
        elif self.kind == "logarithmic":
            if float(p.get("c", 1.0)) <= 0:
                raise DomainError("logarithmic 族要求 c > 0")
        elif self.kind == "tabulated":
            xs = np.asarray(p.get("xs", ()), dtype=float)
            fv = np.asarray(p.get("f", ()), dtype=float)
            gv = np.asarray(p.get("g", ()), dtype=float)
            if xs.size < 2 or xs.shape != fv.shape or xs.shape != gv.shape:
                raise DomainError("tabulated 族需要等长的 xs / f / g（至少两个点）")
            if np.any(np.diff(xs) <= 0):
                raise DomainError("tabulated 族的 xs 必须严格递增")
            if np.any(gv <= 0) or np.any(fv < 0):
                raise DomainError("tabulated 族要求 f ≥ 0、g > 0")

    # --- 构造 ---

    @classmethod
    def fixed(cls, nu: float, mu_deact: float = 1.0) -> "RateFunctionFamily":
        return cls("fixed", (("nu", float(nu)), ("mu_deact", float(mu_deact))))

    @classmethod
    def loglog(cls) -> "RateFunctionFamily":
        return cls("loglog")

    @classmethod
    def polynomial(cls, a: float = 1.0, c: float = 1.0) -> "RateFunctionFamily":
        return cls("polynomial", (("a", float(a)), ("c", float(c))))

    @classmethod
    def logarithmic(cls, c: float = 1.0) -> "RateFunctionFamily":
        return cls("logarithmic", (("c", float(c)),))

    @classmethod
    def tabulated(cls, xs, f_values, g_values) -> "RateFunctionFamily":
        return cls("tabulated", (
            ("xs", tuple(float(x) for x in xs)),
            ("f", tuple(float(v) for v in f_values)),
            ("g", tuple(float(v) for v in g_values)),
        ))

    @classmethod
    def from_config(cls, spec: Dict) -> "RateFunctionFamily":
        kind = spec.get("kind")
        if kind == "fixed":
            return cls.fixed(spec["nu"], spec.get("mu_deact", 1.0))
        if kind == "loglog":
            return cls.loglog()
        if kind == "polynomial":
            return cls.polynomial(spec.get("a", 1.0), spec.get("c", 1.0))
        if kind == "logarithmic":
            return cls.logarithmic(spec.get("c", 1.0))
        if kind == "tabulated":
            return cls.tabulated(spec["xs"], spec["f"], spec["g"])
        raise DomainError(f"未知的速率函数族 {kind}", supported=SUPPORTED_FAMILIES)

    @property
    def param_dict(self) -> Dict[str, object]:
        return dict(self.params)

    def describe(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in self.params if k not in ("xs", "f", "g"))
        return f"{self.kind}({inner})" if inner else self.kind

    # --- 取值 ---

    def f(self, x):
        x = np.asarray(x, dtype=float)
        p = self.param_dict
        if self.kind == "fixed":
            return np.full_like(x, float(p["nu"]))
        if self.kind == "loglog":
            r = np.log1p(x)
            return r / (1.0 + r)
        if self.kind == "polynomial":
            return np.power(x, float(p["a"]))
        if self.kind == "logarithmic":
            return np.log1p(x)
        return np.interp(x, p["xs"], p["f"])

    def g(self, x):
        x = np.asarray(x, dtype=float)
        p = self.param_dict
        if self.kind == "fixed":
            return np.full_like(x, float(p["mu_deact"]))
        if self.kind == "loglog":
            return 1.0 / (1.0 + np.log1p(x))
        if self.kind in ("polynomial", "logarithmic"):
            return np.full_like(x, float(p["c"]))
        return np.interp(x, p["xs"], p["g"])

    def h(self, x):
        if self.kind == "loglog":
            # f/g 化简后就是 r(x)
            return np.log1p(np.asarray(x, dtype=float))
        return self.f(x) / self.g(x)

    # --- 反函数 ---

    def f_inverse(self, y: float) -> float:
        return _inverse_increasing(lambda x: float(self.f(x)), y, "f")

    def h_inverse(self, y: float) -> float:
        return _inverse_increasing(lambda x: float(self.h(x)), y, "h")

    def g_inverse(self, y: float) -> float:
        return _inverse_decreasing(lambda x: float(self.g(x)), y, "g")

    # --- 探测网格上的契约检查 ---

    def require_concave_increasing_f(self):
        _check_shape(self.f, "f", increasing=True, concave=True)

    def require_convex_decreasing_g(self):
        _check_shape(self.g, "g", increasing=False, concave=False)

    def require_increasing_h(self):
        _check_shape(self.h, "h", increasing=True, concave=None)


def probe_grid() -> np.ndarray:
    n = int(settings.get("probe", "grid_points"))
    lo = float(settings.get("probe", "x_min"))
    hi = float(settings.get("probe", "x_max"))
    return np.concatenate([[0.0], np.logspace(np.log10(lo), np.log10(hi), n)])


def _check_shape(fn: Callable, name: str, increasing: bool, concave: Optional[bool]):
    xs = probe_grid()
    ys = np.asarray(fn(xs), dtype=float)
    scale = max(1.0, float(np.max(np.abs(ys))))
    tol = 1e-12 * scale
    steps = np.diff(ys)
    if increasing and np.any(steps < -tol):
        bad = float(xs[1:][np.argmin(steps)])
        raise ContractError(f"{name} 在探测网格上不是非减的", x=bad)
    if not increasing and np.any(steps > tol):
        bad = float(xs[1:][np.argmax(steps)])
        raise ContractError(f"{name} 在探测网格上不是非增的", x=bad)
    if concave is None:
        return
    mids = np.asarray(fn(0.5 * (xs[:-1] + xs[1:])), dtype=float)
    chords = 0.5 * (ys[:-1] + ys[1:])
    gap = mids - chords
    if concave and np.any(gap < -tol):
        raise ContractError(f"{name} 在探测网格上不满足凹性（中点不等式）", x=float(xs[np.argmin(gap)]))
    if not concave and np.any(gap > tol):
        raise ContractError(f"{name} 在探测网格上不满足凸性（中点不等式）", x=float(xs[np.argmax(gap)]))


def _inverse_increasing(fn: Callable[[float], float], y: float, name: str) -> float:
    rel = settings.tolerance("inverse_rel")
    y0 = fn(0.0)
    if y == y0:
        return 0.0
    if y < y0:
        raise InverseError(f"{name}^-1 的参数小于 {name}(0)", y=y, lower=y0)
    hi = 1.0
    while fn(hi) < y:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            raise InverseOverflowError(f"{name}^-1 的解超过 {_BRACKET_LIMIT:g}", y=y)
    lo = hi / 2.0 if hi > 1.0 else 0.0
    return float(bisect(lambda x: fn(x) - y, lo, hi, xtol=1e-300, rtol=max(rel, 1e-15), maxiter=2000))


def _inverse_decreasing(fn: Callable[[float], float], y: float, name: str) -> float:
    rel = settings.tolerance("inverse_rel")
    y0 = fn(0.0)
    if y == y0:
        return 0.0
    if y > y0:
        raise InverseError(f"{name}^-1 的参数大于 {name}(0)", y=y, upper=y0)
    hi = 1.0
    while fn(hi) > y:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            raise InverseOverflowError(f"{name}^-1 的解超过 {_BRACKET_LIMIT:g}", y=y)
    lo = hi / 2.0 if hi > 1.0 else 0.0
    return float(bisect(lambda x: fn(x) - y, lo, hi, xtol=1e-300, rtol=max(rel, 1e-15), maxiter=2000))
