# core/errors.py
# -*- coding: utf-8 -*-
"""
统一异常层级。

- 所有模块只抛这里定义的异常，main.py 按 exit_code 决定退出码：
    0 = 正常，1 = 校验类错误，2 = 资源 / 数值类错误
- “发现”（下界为空、仿真不收敛、引理检查失败）不是异常，走结果对象上的标记。
"""

from __future__ import annotations

from typing import Any, Optional


class CsmaError(Exception):
    """所有 csma_delay 异常的基类。"""

    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        if not self.context:
            return self.message
        extra = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({extra})"


# ---------- 校验类（exit 1） ----------

class ValidationError(CsmaError):
    exit_code = 1


class ConfigError(ValidationError):
    """配置文件解析 / 校验失败，带字段路径和（可选）行号。"""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        context = {}
        if field:
            context["field"] = field
        if line is not None:
            context["line"] = line
        super().__init__(message, **context)
        self.field = field
        self.line = line


class InvalidDescriptorError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class DecompositionError(ValidationError):
    pass


class NotIndependentError(DecompositionError):
    pass


class CliqueConditionError(DecompositionError):
    def __init__(self, message: str, nodes):
        super().__init__(message, nodes=sorted(nodes))
        self.nodes = sorted(nodes)


class AssumptionViolatedError(ValidationError):
    """多部假设不成立（Ω* 以外存在 H ≥ 1 的状态）：witness 为违反条件的状态（bit 元组）。"""

    def __init__(self, message: str, witness, h_value: float):
        super().__init__(message, witness=witness, h=h_value)
        self.witness = witness
        self.h_value = h_value


class InfeasibleLoadError(ValidationError):
    pass


class PreconditionError(ValidationError):
    def __init__(self, message: str, required_rho: Optional[float] = None, **context: Any):
        if required_rho is not None:
            context["required_rho"] = required_rho
        super().__init__(message, **context)
        self.required_rho = required_rho


class WrongTopologyError(ValidationError):
    pass


class ContractError(ValidationError):
    """黑盒函数（f / g / h）在探测网格上不满足单调 / 凹凸性假设。"""
    pass


class InsufficientDataError(ValidationError):
    pass


class UnavailableError(ValidationError):
    pass


# ---------- 资源 / 数值类（exit 2） ----------

class ResourceError(CsmaError):
    exit_code = 2

    def __init__(self, message: str, cap: str, limit: int, estimate: Optional[int] = None):
        context = {"cap": cap, "limit": limit}
        if estimate is not None:
            context["estimate"] = estimate
        super().__init__(message, **context)
        self.cap = cap
        self.limit = limit
        self.estimate = estimate


class NumericError(CsmaError):
    exit_code = 2


class NumericRangeError(NumericError):
    pass


class InverseError(NumericError):
    pass


class SolverError(NumericError):
    pass


class InverseOverflowError(InverseError):
    """反函数在二分上限内够不到目标值：解比上限还大（或不存在），作下界时按 +∞ 处理。"""
    pass
