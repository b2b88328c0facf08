"""Generalized metric on mappings and the contraction ``J h = h(3 .)/3``.

Distances are suprema over a finite sample, so every value here is a lower
bound for the distance over the whole algebra; verdicts read "no violation
found on the sample".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .algebra import Element, op_norm
from .checks import Check
from .control import ControlFunction, lipschitz_L, one_minus_L, phi
from .hyers import LimitMap, hyers_limit
from .mappings import Mapping
from .sampling import MAX_DEPTH, SampleSet


def _phi0(cf6: ControlFunction, x: Element) -> float:
    o = x * 0.0
    return phi(cf6, [x, o, o, o, o, o])


def gen_metric(g: Mapping, h: Mapping, points: SampleSet | Sequence[Element],
               cf6: ControlFunction, atol: float = 0.0) -> float:
    """``sup ||g(x) - h(x)|| / phi(x, 0, 0, 0, 0, 0)`` over the points; may be inf.

    Differences at or below ``atol * max(1, ||x||)`` count as zero.
    """
    pts = points.base_points if isinstance(points, SampleSet) else points
    best = 0.0
    for x in pts:
        num = op_norm(g(x) - h(x))
        if num <= atol * max(1.0, x.norm):
            continue
        den = _phi0(cf6, x)
        if den == 0.0:
            return math.inf
        best = max(best, num / den)
    return best


class RescaledMap(Mapping):
    """``J^m f``: ``x -> f(3^m x) / 3^m``, evaluated by argument scaling."""

    def __init__(self, f: Mapping, m: int):
        if not 0 <= m <= MAX_DEPTH:
            raise OverflowError(f"J applied {m} times exceeds the depth cap {MAX_DEPTH}")
        self.root, self.m = f, m
        k = 3.0 ** m
        super().__init__(lambda x: f(x * k) / k, f.domain, f.codomain,
                         label=f"J^{m}({f.label})")


def apply_J(h: Mapping, times: int = 1) -> Mapping:
    if isinstance(h, RescaledMap):
        return RescaledMap(h.root, h.m + times)
    return RescaledMap(h, times)


def contraction_witness(g: Mapping, h: Mapping, samples: SampleSet, cf6: ControlFunction,
                        levels: Sequence[int] | None = None, atol: float = 0.0) -> Check:
    """``d(Jg, Jh)`` on orbit levels against ``L d(g, h)`` on the tripled levels."""
    if samples.depth < 1:
        raise ValueError("contraction witness needs orbit depth >= 1")
    levels = list(range(samples.depth)) if levels is None else list(levels)
    if max(levels) + 1 > samples.depth:
        raise ValueError("insufficient orbit depth for the tripled sample")
    lhs = gen_metric(apply_J(g), apply_J(h), samples.points(levels), cf6, atol)
    rhs = lipschitz_L(cf6) * gen_metric(g, h, samples.points([k + 1 for k in levels]), cf6, atol)
    return Check("contraction", lhs, rhs, tol=1e-10)


@dataclass
class OrbitRecord:
    m: int
    distance: float
    levels: int
    ratio: float | None = None

    def to_record(self) -> dict:
        return {"m": self.m, "d(J^m f, J^m+1 f)": self.distance, "levels": self.levels,
                "ratio": self.ratio}


@dataclass
class AlternativeAudit:
    records: list[OrbitRecord]
    finiteness: Check
    decay: Check
    convergence: Check
    uniqueness: Check
    distance_bound: Check
    lambda_membership: Check
    limits: list = field(default_factory=list, repr=False)

    @property
    def checks(self) -> list[Check]:
        return [self.finiteness, self.decay, self.convergence, self.lambda_membership,
                self.uniqueness, self.distance_bound]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class OrbitTable:
    """``f(3^k x)`` for every base point and ``k = 0..depth``, computed once.

    ``J^m f`` at the orbit point ``3^j x`` is ``f(3^(j+m) x) / 3^m``.
    """

    def __init__(self, f: Mapping, samples: SampleSet, depth: int):
        if depth > samples.depth:
            raise ValueError(f"need orbit depth {depth}, have {samples.depth}")
        self.depth = depth
        self.points = [[x * 3.0 ** k for k in range(depth + 1)] for x in samples.base_points]
        self.values = [[f(y) for y in row] for row in self.points]

    def J(self, i: int, m: int, j: int) -> Element:
        return self.values[i][j + m] / 3.0 ** m


def orbit_distances(f: Mapping | OrbitTable, samples: SampleSet, cf6: ControlFunction,
                    m_max: int, atol: float = 0.0) -> list[OrbitRecord]:
    """``d(J^m f, J^(m+1) f)`` for ``m = 0..m_max``.

    The distance at step m is taken over orbit levels ``0..m_max - m``; these
    nested sets make ``d_(m+1) <= L d_m`` hold exactly in exact arithmetic.
    """
    if m_max + 1 > samples.depth:
        raise ValueError(f"m_max={m_max} needs orbit depth {m_max + 1}, have {samples.depth}")
    table = f if isinstance(f, OrbitTable) else OrbitTable(f, samples, m_max + 1)
    phis = [[_phi0(cf6, y) for y in row] for row in table.points]
    out = []
    for m in range(m_max + 1):
        lv = m_max - m
        d = 0.0
        for i, row in enumerate(table.points):
            for j in range(lv + 1):
                num = op_norm(table.J(i, m, j) - table.J(i, m + 1, j))
                if num <= atol * max(1.0, row[j].norm):
                    continue
                if phis[i][j] == 0.0:
                    d = math.inf
                    break
                d = max(d, num / phis[i][j])
        ratio = None
        if out and out[-1].distance > 0 and math.isfinite(out[-1].distance):
            ratio = d / out[-1].distance
        out.append(OrbitRecord(m, d, lv + 1, ratio))
    return out


def alternative_audit(f: Mapping, samples: SampleSet, cf6: ControlFunction, m_max: int,
                      h: LimitMap, g_alt: Mapping, atol: float = 1e-13,
                      agree_tol: float = 1e-8, rtol: float = 1e-12) -> AlternativeAudit:
    """Numerical witnesses for the four clauses of the fixed-point alternative.

    ``h`` is the Hyers limit of ``f``; ``g_alt`` is a second start with
    ``d(f, g_alt) < inf`` used for the uniqueness probe.
    """
    L = lipschitz_L(cf6)
    table = OrbitTable(f, samples, m_max + 1)
    records = orbit_distances(table, samples, cf6, m_max, atol)
    dists = [r.distance for r in records]
    finite = sum(math.isfinite(d) for d in dists)
    finiteness = Check("alternative:finite-from-m0=0", float(len(dists) - finite), 0.0,
                       note="number of infinite orbit distances")

    worst_ratio = 0.0
    for a, b in zip(dists, dists[1:]):
        if a == 0.0:
            worst_ratio = max(worst_ratio, 0.0 if b == 0.0 else math.inf)
        else:
            worst_ratio = max(worst_ratio, b / a)
    decay = Check("alternative:geometric-decay", worst_ratio, L + 1e-6,
                  note="max d_(m+1)/d_m against L")

    base = samples.base_points
    d0 = dists[0]
    # a-priori estimate d(J^m f, h) <= L^m/(1-L) d(f, Jf), checked pointwise on base points
    worst = -math.inf
    lhs_w = rhs_w = 0.0
    hs = [h(x) for x in base]
    for m in range(m_max + 1):
        lhs = 0.0
        for i, x in enumerate(base):
            num = op_norm(table.J(i, m, 0) - hs[i])
            if num > atol * max(1.0, x.norm):
                den = _phi0(cf6, x)
                lhs = max(lhs, num / den if den else math.inf)
        rhs = L ** m / one_minus_L(cf6) * d0
        if lhs - rhs > worst:
            worst, lhs_w, rhs_w = lhs - rhs, lhs, rhs
    convergence = Check("alternative:convergence", lhs_w, rhs_w, tol=1e-9,
                        note="worst m of d(J^m f, h) <= L^m/(1-L) d(f, Jf)")

    d_alt = gen_metric(f, g_alt, base, cf6, atol)
    lam = Check("alternative:lambda-membership", d_alt, math.inf,
                note="d(f, g) finite for the second start")
    if not math.isfinite(d_alt):
        lam = Check("alternative:lambda-membership", math.inf, 0.0,
                    note="second start outside Lambda")
    gap = 0.0
    for x in base:
        other = hyers_limit(g_alt, x, rtol * max(1.0, x.norm))
        gap = max(gap, op_norm(other.value - h(x)) / max(1.0, x.norm))
    uniqueness = Check("alternative:uniqueness", gap, agree_tol,
                       note="max ||lim J^m g(x) - h(x)|| / max(1, ||x||)")

    d_fh = gen_metric(f, h, base, cf6, atol)
    distance_bound = Check("alternative:distance-bound", d_fh, d0 / one_minus_L(cf6), tol=1e-9,
                           note="d(f, h) <= d(f, Jf)/(1-L)")
    return AlternativeAudit(records, finiteness, decay, convergence, uniqueness,
                            distance_bound, lam, [h.estimate(x) for x in base])
