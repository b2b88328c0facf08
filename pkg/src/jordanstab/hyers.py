"""The scaled-orbit correction ``T(x) = lim 3^-n f(3^n x)`` and its bounds."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import Element, adjoint, commutator_norm, op_norm, unit
from .checks import Check, SampleCheck
from .control import ControlFunction, lipschitz_L, one_minus_L, phi, phi_tilde
from .mappings import Mapping
from .sampling import MAX_DEPTH, SampleSet

OVERFLOW_NORM = 1e250
NOISE_FLOOR = 16 * np.finfo(float).eps
# increments this many noise floors above roundoff are trusted for rate fits
SIGNAL = 1e6


class OverflowGuard(ArithmeticError):
    pass


def hyers_iterate(f: Mapping, x: Element, n: int) -> Element:
    if not 0 <= n <= MAX_DEPTH:
        raise OverflowGuard(f"orbit depth {n} exceeds the cap {MAX_DEPTH}")
    k = 3.0 ** n
    if x.norm * k >= OVERFLOW_NORM:
        raise OverflowGuard(f"||3^{n} x|| would reach {x.norm * k:.3g}")
    return f(x * k) / k if n else f(x)


@dataclass
class LimitEstimate:
    value: Element
    rate: float
    n_used: int
    converged: bool
    increments: list[float] = field(default_factory=list, repr=False)

    @property
    def last_increment(self) -> float:
        return self.increments[-1] if self.increments else 0.0


def fit_rate(increments: Sequence[float], floor: float = 0.0) -> float:
    """Geometric rate of a decreasing sequence: exp of the log-linear slope.

    Only increments above ``SIGNAL * floor`` enter the fit, so roundoff in
    the tail does not bias it; with fewer than two such increments every
    increment above ``floor`` is used. Returns 0 when nothing is left.
    """
    pts = [(k, math.log(d)) for k, d in enumerate(increments) if d > SIGNAL * floor]
    if len(pts) < 2:
        pts = [(k, math.log(d)) for k, d in enumerate(increments) if d > floor]
    if len(pts) < 2:
        return 0.0
    ks = np.array([k for k, _ in pts], dtype=float)
    ls = np.array([l for _, l in pts])
    slope = np.polyfit(ks, ls, 1)[0]
    return float(math.exp(slope))


def hyers_limit(f: Mapping, x: Element, tol: float, n_max: int = MAX_DEPTH) -> LimitEstimate:
    """Iterate ``3^-n f(3^n x)`` until the geometric tail is below ``tol``.

    Stops once the last increment is at most ``tol * (1 - r)``, ``r`` being
    the median of the last three increment ratios, or once an increment drops
    to roundoff level. Running out of steps is reported through
    ``converged=False``, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prev = f(x)
    floor = NOISE_FLOOR * max(1.0, prev.norm, x.norm)
    incs: list[float] = []
    cur = prev
    for n in range(1, n_max + 1):
        try:
            cur = hyers_iterate(f, x, n)
        except OverflowGuard:
            return LimitEstimate(prev, fit_rate(incs, floor), n - 1, False, incs)
        d = op_norm(cur - prev)
        incs.append(d)
        if d <= floor:
            return LimitEstimate(cur, fit_rate(incs, floor), n, True, incs)
        if len(incs) >= 2:
            ratios = [b / a for a, b in zip(incs[-4:-1], incs[-3:]) if a > 0]
            r = statistics.median(ratios) if ratios else 1.0
            if r < 1 and d <= tol * (1 - r):
                return LimitEstimate(cur, fit_rate(incs, floor), n, True, incs)
        prev = cur
    return LimitEstimate(cur, fit_rate(incs, floor), n_max, False, incs)


class LimitMap(Mapping):
    """Pointwise Hyers limit of ``f``, computed on demand and memoized.

    The stopping tolerance is ``rtol * max(1, ||x||)``.
    """

    def __init__(self, f: Mapping, rtol: float = 1e-12, n_max: int = MAX_DEPTH):
        self.f = f
        self.rtol = rtol
        self.n_max = n_max
        self.cache: dict[bytes, LimitEstimate] = {}
        super().__init__(self._value, f.domain, f.codomain, label=f"lim {f.label}")

    @staticmethod
    def key(x: Element) -> bytes:
        return b"".join(b.tobytes() for b in x.blocks)

    def estimate(self, x: Element) -> LimitEstimate:
        k = self.key(x)
        if k not in self.cache:
            self.cache[k] = hyers_limit(self.f, x, self.rtol * max(1.0, x.norm), self.n_max)
        return self.cache[k]

    def _value(self, x: Element) -> Element:
        return self.estimate(x).value


class MaterializedMap(Mapping):
    """A mapping known only on finitely many points."""

    def __init__(self, points: Iterable[Element], values: Iterable[Element], domain, codomain,
                 label: str = "materialized"):
        self.table = {LimitMap.key(x): v for x, v in zip(points, values)}
        super().__init__(self._lookup, domain, codomain, label=label)

    def _lookup(self, x: Element) -> Element:
        try:
            return self.table[LimitMap.key(x)]
        except KeyError:
            raise KeyError("mapping is not materialized at this point") from None


@dataclass
class HyersResult:
    limits: list[LimitEstimate]
    bound: SampleCheck | None = None

    @property
    def converged(self) -> bool:
        return all(est.converged for est in self.limits)

    @property
    def rates(self) -> list[float]:
        return [est.rate for est in self.limits]

    @property
    def passed(self) -> bool:
        return self.converged and (self.bound is None or self.bound.passed)

    def rows(self) -> list[dict]:
        margins = self.bound.margins if self.bound is not None else [None] * len(self.limits)
        return [{"sample": i, "n_used": est.n_used, "converged": est.converged,
                 "rate": est.rate, "last_increment": est.last_increment, "margin": m}
                for i, (est, m) in enumerate(zip(self.limits, margins))]


def run_limits(f: Mapping, points: Sequence[Element], rtol: float = 1e-12,
               n_max: int = MAX_DEPTH) -> list[LimitEstimate]:
    return [hyers_limit(f, x, rtol * max(1.0, x.norm), n_max) for x in points]


def verify_jensen_bound(f: Mapping, T: Mapping, samples: SampleSet | Sequence[Element],
                        cf: ControlFunction, tol: float = 1e-9, mode: str = "closed",
                        partial_N: int = 200) -> SampleCheck:
    """``||f(x) - T(x)|| <= (phi~(x, -x, 0) + phi~(-x, 3x, 0)) / 3`` per sample."""
    if cf.arity != 3:
        raise ValueError("the Jensen bound needs a 3-argument control function")
    pts = samples.base_points if isinstance(samples, SampleSet) else list(samples)
    lhs, rhs = [], []
    for x in pts:
        o = x * 0.0
        bound = (phi_tilde(cf, [x, -x, o], mode, partial_N)
                 + phi_tilde(cf, [-x, x * 3.0, o], mode, partial_N)) / 3
        lhs.append(op_norm(f(x) - T(x)))
        rhs.append(bound)
    return SampleCheck("jensen-bound", lhs, rhs, tol)


def fp_factor(cf: ControlFunction) -> float:
    return lipschitz_L(cf) / one_minus_L(cf)


def verify_fp_bound(f: Mapping, h: Mapping, samples: SampleSet | Sequence[Element],
                    cf6: ControlFunction, tol: float = 1e-9) -> SampleCheck:
    """``||f(x) - h(x)|| <= L/(1-L) phi(x, 0, 0, 0, 0, 0)`` per sample."""
    if cf6.arity != 6:
        raise ValueError("the fixed-point bound needs a 6-argument control function")
    pts = samples.base_points if isinstance(samples, SampleSet) else list(samples)
    k = fp_factor(cf6)
    lhs, rhs = [], []
    for x in pts:
        o = x * 0.0
        lhs.append(op_norm(f(x) - h(x)))
        rhs.append(k * phi(cf6, [x, o, o, o, o, o]))
    return SampleCheck("fixed-point-bound", lhs, rhs, tol)


@dataclass
class UnitalityVerdict:
    unitary: Check
    central: Check

    @property
    def passed(self) -> bool:
        return self.unitary.passed and self.central.passed


def unitality_check(T_e: Element, probes: Sequence[Element], tau: float = 1e-9) -> UnitalityVerdict:
    """Is the limit at the unit unitary and central?"""
    e = unit(T_e.shape)
    defect = max(op_norm(adjoint(T_e) @ T_e - e), op_norm(T_e @ adjoint(T_e) - e))
    return UnitalityVerdict(
        Check("unitality:unitary", defect, tau, note="max(||T(e)*T(e) - e||, ||T(e)T(e)* - e||)"),
        Check("unitality:central", commutator_norm(T_e, probes), tau,
              note=f"max ||T(e)q - qT(e)|| over {len(probes)} probes"),
    )
