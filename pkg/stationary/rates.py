# stationary/rates.py
# -*- coding: utf-8 -*-

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from core.errors import DomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]


def _as_vector(value: ArrayLike, n_nodes: Optional[int], name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        if n_nodes is None:
            raise DomainError(f"{name} 是标量时必须给出 n_nodes")
        arr = np.full(n_nodes, float(arr))
    elif n_nodes is not None and arr.shape[0] != n_nodes:
        raise DomainError(f"{name} 的长度和节点数不一致", expected=n_nodes, got=arr.shape[0])
    return arr


@dataclass(frozen=True, eq=False)
class FixedRates:
    """
    固定速率策略下每个节点的激活 / 去激活速率。

    sigma = nu / mu_deact 为名义激活因子；nu = ν_i φ_i，mu_deact = μ_i ψ_i。
    """

    sigma: np.ndarray
    nu: np.ndarray
    mu_deact: np.ndarray

    def __post_init__(self):
        for name in ("sigma", "nu", "mu_deact"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise DomainError(f"{name} 必须是一维向量")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise DomainError(f"{name} 必须全部为有限正数", values=arr.tolist())
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.sigma.shape == self.nu.shape == self.mu_deact.shape):
            raise DomainError("sigma / nu / mu_deact 长度不一致")
        ratio = self.nu / self.mu_deact
        if np.max(np.abs(ratio - self.sigma) / self.sigma) > 1e-12:
            raise DomainError("sigma 与 nu / mu_deact 不一致")

    @property
    def n_nodes(self) -> int:
        return int(self.sigma.shape[0])

    @classmethod
    def from_sigma(
        cls,
        sigma: ArrayLike,
        n_nodes: Optional[int] = None,
        mu_deact: ArrayLike = 1.0,
    ) -> "FixedRates":
        """按 σ 构造，默认 μψ ≡ 1（时间单位），则 νφ = σ。"""
        sig = _as_vector(sigma, n_nodes, "sigma")
        mu = _as_vector(mu_deact, sig.shape[0], "mu_deact")
        return cls(sigma=sig, nu=sig * mu, mu_deact=mu)

    @classmethod
    def from_rates(cls, nu: ArrayLike, mu_deact: ArrayLike, n_nodes: Optional[int] = None) -> "FixedRates":
        nu_v = _as_vector(nu, n_nodes, "nu")
        mu_v = _as_vector(mu_deact, nu_v.shape[0], "mu_deact")
        return cls(sigma=nu_v / mu_v, nu=nu_v, mu_deact=mu_v)

    @property
    def max_rate(self) -> float:
        """单节点最大跳转速率，均匀化用。"""
        return float(np.max(np.maximum(self.nu, self.mu_deact)))
