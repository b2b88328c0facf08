"""Power-type control functions ``theta * sum ||x_j||^p`` and their series.

Every bound in the stability theory is phrased through a control function
and, for the fixed-point route, through the contraction constant
``L = 3^(p-1)`` of the rescaling operator ``h -> h(3 .)/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .algebra import Element

LOG3 = math.log(3.0)


@dataclass(frozen=True)
class ControlParams:
    theta: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise ValueError(f"theta must be a finite nonnegative number, got {self.theta}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


@dataclass(frozen=True)
class ControlFunction:
    """A control function of 3 or 6 element arguments.

    ``func`` replaces the built-in power family by an arbitrary callable; such
    functions only support the partial-sum mode of :func:`phi_tilde`.
    """

    params: ControlParams | None
    arity: int = 3
    func: Callable[..., float] | None = None

    def __post_init__(self):
        if self.arity not in (3, 6):
            raise ValueError(f"arity must be 3 or 6, got {self.arity}")
        if self.params is None and self.func is None:
            raise ValueError("need power-family params or a custom func")

    @property
    def is_power(self) -> bool:
        return self.func is None

    def halved(self) -> "ControlFunction":
        return power_control(self.params.theta / 2, self.params.p, self.arity)

    def __call__(self, *args: Element) -> float:
        return phi(self, args)


def power_control(theta: float, p: float, arity: int = 3) -> ControlFunction:
    return ControlFunction(ControlParams(float(theta), float(p)), arity)


def _pow(t: float, p: float) -> float:
    return 0.0 if t == 0.0 else t ** p


def phi(cf: ControlFunction, args: Sequence[Element]) -> float:
    if len(args) != cf.arity:
        raise TypeError(f"control function takes {cf.arity} arguments, got {len(args)}")
    if not cf.is_power:
        return float(cf.func(*args))
    p = cf.params.p
    return cf.params.theta * sum(_pow(a.norm, p) for a in args)


def lipschitz_L(cf: ControlFunction) -> float:
    return 3.0 ** (cf.params.p - 1)


def one_minus_L(cf: ControlFunction) -> float:
    """``1 - 3^(p-1)`` without cancellation for p close to 1."""
    return -math.expm1((cf.params.p - 1) * LOG3)


def phi_tilde(cf: ControlFunction, args: Sequence[Element], mode: str = "closed",
              partial_N: int = 200) -> float:
    """``sum_{n>=0} 3^-n phi(3^n args)``.

    ``mode="partial"`` sums the terms ``n = 0..partial_N`` by actually
    rescaling the arguments; ``mode="closed"`` uses ``phi/(1 - 3^(p-1))``,
    available for the power family only.
    """
    if mode == "closed":
        if not cf.is_power:
            raise ValueError("closed form exists only for the power family")
        if cf.params.p >= 1:
            raise ValueError("series diverges for p >= 1")
        return phi(cf, args) / one_minus_L(cf)
    if mode != "partial":
        raise ValueError(f"unknown mode {mode!r}")
    total = 0.0
    for n in range(partial_N + 1):
        k = 3.0 ** n
        total += phi(cf, [a * k for a in args]) / k
    return total


def series_tail_bound(cf: ControlFunction, args: Sequence[Element], N: int) -> float:
    """Upper bound ``3^(N(p-1)) * phi_tilde`` on the error of the partial sum."""
    return lipschitz_L(cf) ** N * phi_tilde(cf, args)


def contraction_residual(cf: ControlFunction, args: Sequence[Element]) -> float:
    """``phi(args) - 3L phi(args/3)``; zero for the power family."""
    L = lipschitz_L(cf)
    return phi(cf, args) - 3 * L * phi(cf, [a / 3 for a in args])


def fp_bound_constant(cf: ControlFunction, rtol: float = 1e-14) -> float:
    """``L/(1-L) * theta``, cross-checked against ``3^p theta/(3 - 3^p)``."""
    theta, p = cf.params.theta, cf.params.p
    via_L = lipschitz_L(cf) / one_minus_L(cf) * theta
    # 3^p/(3 - 3^p) = 1/(3^(1-p) - 1)
    direct = theta / math.expm1((1 - p) * LOG3)
    if abs(via_L - direct) > rtol * max(abs(direct), 1e-300):
        raise ArithmeticError(f"bound constants disagree: {via_L!r} vs {direct!r}")
    return direct
