"""Exact Jordan *-homomorphisms, perturbations of them, and defect functionals.

Between direct sums of matrix blocks every unital Jordan *-homomorphism we
build has the form

    x  ->  U_i^* (x_i  or  x_i^T) U_i   placed in block  pi(i)

for a permutation ``pi`` of equal-size blocks and unitaries ``U_i``. The
transpose blocks make the map a Jordan morphism that is not multiplicative.
Perturbations add a term ``delta(x)`` with ``||delta(x)|| <= theta' ||x||^p``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from .algebra import (
    AlgebraShape,
    Element,
    ShapeMismatch,
    adjoint,
    as_shape,
    is_self_adjoint,
    is_unitary,
    jordan_product,
    op_norm,
    random_element,
    random_unitary,
    singular_values,
    zero,
)
from .sampling import MAX_DEPTH, SampleSet, mu_choices

MEMBERSHIP_TOL = 1e-9


class Mapping:
    """An evaluable map ``f: A -> B`` with ``f(0) = 0`` enforced."""

    def __init__(self, func: Callable[[Element], Element], domain, codomain,
                 label: str = "", spec: "MappingSpec | None" = None,
                 base: "Mapping | None" = None):
        self._func = func
        self.domain = as_shape(domain)
        self.codomain = as_shape(codomain)
        self.label = label
        self.spec = spec
        self.base = base

    def __call__(self, x: Element) -> Element:
        if x.shape != self.domain:
            raise ShapeMismatch(f"{self.label or 'mapping'} expects {self.domain}, got {x.shape}")
        if not any(b.any() for b in x.blocks):
            return zero(self.codomain)
        y = self._func(x)
        if y.shape != self.codomain:
            raise ShapeMismatch(f"mapping produced {y.shape}, expected {self.codomain}")
        return y

    def __repr__(self):
        return f"Mapping({self.label!r}: {self.domain} -> {self.codomain})"


MappingUnderTest = Mapping


@dataclass(frozen=True)
class PerturbationSpec:
    """``kind`` is one of none, radial, hashed-radial, jump.

    radial:        delta(x) = theta ||x||^p D for a fixed unit element D
    hashed-radial: same envelope, direction drawn from a hash of x's entries
    jump:          radial on non-invertible x, zero elsewhere (discontinuous)
    """

    kind: str = "none"
    theta: float = 0.0
    p: float = 0.5
    direction: Element | None = None
    seed: int = 0

    KINDS = ("none", "radial", "hashed-radial", "jump")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.theta < 0 or not math.isfinite(self.theta):
            raise ValueError("perturbation theta must be finite and >= 0")
        if self.kind != "none" and not 0 <= self.p <= 1:
            raise ValueError("perturbation exponent p must lie in [0, 1]")
        if self.direction is not None and abs(self.direction.norm - 1) > 1e-12:
            raise ValueError("perturbation direction must have norm one")


NO_PERTURBATION = PerturbationSpec()


@dataclass(frozen=True)
class BlockPlan:
    target: int
    unitary: np.ndarray
    transpose: bool = False


@dataclass(frozen=True)
class MappingSpec:
    domain: AlgebraShape
    codomain: AlgebraShape
    plan: tuple[BlockPlan, ...]
    perturbation: PerturbationSpec = NO_PERTURBATION
    scale: complex = 1.0

    def validate(self):
        dom, cod = as_shape(self.domain), as_shape(self.codomain)
        if len(self.plan) != dom.n_blocks:
            raise ValueError("one block plan per domain block required")
        targets = sorted(bp.target for bp in self.plan)
        if targets != list(range(cod.n_blocks)):
            raise ValueError(f"block targets {targets} are not a permutation of the codomain blocks")
        for i, bp in enumerate(self.plan):
            d = dom.block_dims[i]
            if cod.block_dims[bp.target] != d:
                raise ValueError(f"block {i} (M{d}) routed to M{cod.block_dims[bp.target]}")
            u = np.asarray(bp.unitary, dtype=complex)
            if u.shape != (d, d) or np.linalg.norm(u.conj().T @ u - np.eye(d), 2) > 1e-10:
                raise ValueError(f"block {i} conjugator is not a {d}x{d} unitary")


def identity_spec(shape) -> MappingSpec:
    shape = as_shape(shape)
    plan = tuple(BlockPlan(i, np.eye(d, dtype=complex)) for i, d in enumerate(shape.block_dims))
    return MappingSpec(shape, shape, plan)


def make_spec(domain, seed=None, transpose: Sequence[bool] | None = None,
              permutation: Sequence[int] | None = None, conjugate: bool = True,
              scale: complex = 1.0) -> MappingSpec:
    """Build a block plan; conjugating unitaries are Haar-random when ``conjugate``."""
    dom = as_shape(domain)
    k = dom.n_blocks
    transpose = [False] * k if transpose is None else list(transpose)
    permutation = list(range(k)) if permutation is None else list(permutation)
    if len(transpose) != k or len(permutation) != k:
        raise ValueError("transpose/permutation lengths must match the number of blocks")
    cod_dims = [0] * k
    for i, t in enumerate(permutation):
        if not 0 <= t < k:
            raise ValueError(f"block target {t} out of range")
        cod_dims[t] = dom.block_dims[i]
    if 0 in cod_dims:
        raise ValueError(f"{permutation} is not a permutation")
    rng = np.random.default_rng(seed)
    plan = []
    for i, d in enumerate(dom.block_dims):
        u = random_unitary((d,), rng).blocks[0] if conjugate else np.eye(d, dtype=complex)
        plan.append(BlockPlan(permutation[i], np.array(u), bool(transpose[i])))
    spec = MappingSpec(dom, AlgebraShape(tuple(cod_dims)), tuple(plan), scale=complex(scale))
    spec.validate()
    return spec


def make_jordan_hom(spec: MappingSpec) -> Mapping:
    if spec.perturbation.kind != "none":
        raise ValueError("make_jordan_hom takes an unperturbed spec; use make_perturbed")
    spec.validate()
    cod = as_shape(spec.codomain)
    plan = [(bp.target, np.asarray(bp.unitary, dtype=complex), bp.transpose) for bp in spec.plan]
    c = complex(spec.scale)

    def h(x: Element) -> Element:
        out = [None] * cod.n_blocks
        for (target, u, tr), b in zip(plan, x.blocks):
            m = b.T if tr else b
            out[target] = u.conj().T @ m @ u
            if c != 1:
                out[target] = c * out[target]
        return Element._raw(cod, out)

    kind = "jordan-hom" if c == 1 else f"{c:g}*jordan-hom"
    return Mapping(h, spec.domain, cod, label=kind, spec=spec)


def unit_direction(shape, seed) -> Element:
    d = random_element(shape, seed)
    return d / d.norm


def _hashed_direction(x: Element, shape: AlgebraShape, seed: int) -> Element:
    digest = hashlib.blake2b(digest_size=16)
    digest.update(int(seed).to_bytes(8, "little", signed=True))
    for b in x.blocks:
        digest.update(np.ascontiguousarray(b).tobytes())
    key = int.from_bytes(digest.digest(), "little")
    return unit_direction(shape, np.random.default_rng([int(seed) & (2**63 - 1), key]))


def make_perturbed(base: Mapping, pert: PerturbationSpec) -> Mapping:
    """``f = h0 + delta`` with the envelope ``||delta(x)|| <= theta ||x||^p``."""
    if pert.kind == "none" or pert.theta == 0.0:
        return Mapping(base, base.domain, base.codomain, label=base.label,
                       spec=base.spec, base=base)
    cod = base.codomain
    theta, p = pert.theta, pert.p
    if pert.kind == "hashed-radial":
        def direction(x):
            return _hashed_direction(x, cod, pert.seed)
    else:
        fixed = pert.direction if pert.direction is not None else unit_direction(cod, pert.seed)
        if fixed.shape != cod:
            raise ShapeMismatch("perturbation direction must live in the codomain")

        def direction(x):
            return fixed

    def f(x: Element) -> Element:
        y = base(x)
        if pert.kind == "jump" and singular_values(x)[0] > 1e-9 * x.norm:
            return y
        return y + (theta * x.norm ** p) * direction(x)

    spec = replace(base.spec, perturbation=pert) if base.spec is not None else None
    return Mapping(f, base.domain, cod, label=f"{base.label}+{pert.kind}({theta:g},{p:g})",
                   spec=spec, base=base)


# -- defect functionals -------------------------------------------------------

def _is_zero(x: Element) -> bool:
    return not any(b.any() for b in x.blocks)


def _require_unitary_or_zero(w: Element):
    if not (_is_zero(w) or is_unitary(w, MEMBERSHIP_TOL)):
        raise ValueError("argument must be unitary or zero")


def jensen_defect(f: Mapping, x: Element, y: Element, mu: complex, u: Element) -> float:
    """``||2f((mu x + mu y)/2) - mu f(x) - mu f(y) + f(u*) - f(u)*||``."""
    _require_unitary_or_zero(u)
    lhs = 2 * f((x + y) * (mu / 2)) - mu * f(x) - mu * f(y) + f(adjoint(u)) - adjoint(f(u))
    return op_norm(lhs)


def in_I1(u: Element, tol: float = MEMBERSHIP_TOL) -> bool:
    """Self-adjoint, norm one and invertible."""
    return (is_self_adjoint(u, tol) and abs(u.norm - 1) <= tol
            and float(singular_values(u)[0]) > tol)


def premise21_defect(f: Mapping, u: Element, y: Element, n: int,
                     path: str = "unitary", check: bool = True) -> float:
    """``||f(3^n(uy + yu)) - f(3^n u) f(y) - f(y) f(3^n u)||``.

    ``path="unitary"`` requires u unitary; ``path="rr0"`` requires u to be an
    invertible self-adjoint element of norm one.
    """
    if not 0 <= n <= MAX_DEPTH:
        raise ValueError(f"n must lie in [0, {MAX_DEPTH}]")
    if check:
        if path == "unitary" and not is_unitary(u, MEMBERSHIP_TOL):
            raise ValueError("u is not unitary")
        if path == "rr0" and not in_I1(u):
            raise ValueError("u is not an invertible self-adjoint element of norm one")
        if path not in ("unitary", "rr0"):
            raise ValueError(f"unknown premise path {path!r}")
    k = 3.0 ** n
    fu, fy = f(u * k), f(y)
    return op_norm(f(jordan_product(u, y) * k) - fu @ fy - fy @ fu)


def jordan_defect(h: Mapping, x: Element, y: Element) -> float:
    hx, hy = h(x), h(y)
    return op_norm(h(jordan_product(x, y)) - hx @ hy - hy @ hx)


def multiplicative_defect(h: Mapping, x: Element, y: Element) -> float:
    return op_norm(h(x @ y) - h(x) @ h(y))


def star_defect(h: Mapping, x: Element) -> float:
    return op_norm(h(adjoint(x)) - adjoint(h(x)))


def additivity_defect(h: Mapping, x: Element, y: Element) -> float:
    return op_norm(h(x + y) - h(x) - h(y))


def homogeneity_defect(h: Mapping, mu: complex, x: Element) -> float:
    return op_norm(h(x * mu) - mu * h(x))


def composite_defect(f: Mapping, x, y, z, u, v, w, mu: complex) -> float:
    """Norm of the six-argument stability expression with symmetric product ``uv + vu``."""
    _require_unitary_or_zero(w)
    fu, fv = f(u), f(v)
    lhs = (f((x + y + z) * (mu / 3)) + f((x - 2 * y + z) * (mu / 3))
           + f((x + y - 2 * z) * (mu / 3)) - mu * f(x)
           + f(jordan_product(u, v)) - fv @ fu - fu @ fv
           + f(adjoint(w)) - adjoint(f(w)))
    return op_norm(lhs)


# -- theta fitting ------------------------------------------------------------

@dataclass(frozen=True)
class DefectSample:
    family: str
    index: int
    mu: complex
    args: tuple[Element, ...] = field(repr=False)


def jensen_tuples(samples: SampleSet) -> Iterator[DefectSample]:
    pts, us = samples.base_points, samples.unitaries
    z = zero(samples.shape)
    n = len(pts)
    for i, x in enumerate(pts):
        y = pts[(i + 1) % n]
        mus = mu_choices(i)
        for mu in mus:
            yield DefectSample("x,y,0", i, mu, (x, y, z))
            yield DefectSample("x,x,0", i, mu, (x, x, z))
        if us:
            w = us[i % len(us)]
            yield DefectSample("x,y,w", i, mus[0], (x, y, w))
            yield DefectSample("0,0,w", i, 1.0, (z, z, w))


def composite_tuples(samples: SampleSet) -> Iterator[DefectSample]:
    pts, us = samples.base_points, samples.unitaries
    o = zero(samples.shape)
    n = len(pts)
    for i, x in enumerate(pts):
        y, zz = pts[(i + 1) % n], pts[(i + 2) % n]
        mus = mu_choices(i)
        for mu in mus:
            yield DefectSample("x,0,0,0,0,0", i, mu, (x, o, o, o, o, o))
            yield DefectSample("x,x,x,0,0,0", i, mu, (x, x, x, o, o, o))
            yield DefectSample("x,y,z,0,0,0", i, mu, (x, y, zz, o, o, o))
        yield DefectSample("0,0,0,u,v,0", i, 1.0, (o, o, o, x, y, o))
        if us:
            w = us[i % len(us)]
            yield DefectSample("0,0,0,0,0,w", i, 1.0, (o, o, o, o, o, w))
            yield DefectSample("x,y,z,u,v,w", i, mus[0], (x, y, zz, y, zz, w))


def defect_ratios(f: Mapping, samples: SampleSet, p: float, kind: str = "jensen",
                  atol: float = 0.0) -> list[tuple[DefectSample, float, float]]:
    """``(tuple, defect, sum ||arg||^p)`` for every generated argument tuple.

    Defects at or below ``atol * max(1, sum ||arg||)`` are recorded as 0.
    """
    if kind == "jensen":
        gen, fn = jensen_tuples(samples), jensen_defect
    elif kind == "composite":
        gen, fn = composite_tuples(samples), composite_defect
    else:
        raise ValueError(f"unknown defect kind {kind!r}")
    out = []
    for t in gen:
        d = fn(f, *t.args, t.mu) if kind == "composite" else fn(f, *t.args[:2], t.mu, t.args[2])
        norms = [a.norm for a in t.args]
        if d <= atol * max(1.0, sum(norms)):
            d = 0.0
        denom = sum(0.0 if s == 0 else s ** p for s in norms)
        out.append((t, d, denom))
    return out


def fit_theta(f: Mapping, samples: SampleSet, p: float, kind: str = "jensen",
              atol: float = 0.0) -> float:
    """Smallest theta making ``defect <= theta * sum ||arg||^p`` hold on the samples."""
    best = 0.0
    for _, d, denom in defect_ratios(f, samples, p, kind, atol):
        if d == 0.0:
            continue
        if denom == 0.0:
            return math.inf
        best = max(best, d / denom)
    return best
