"""Finite sample sets standing in for the universal quantifiers.

A :class:`SampleSet` is a list of nonzero base points together with the
tripling orbits ``3^k x`` up to a fixed depth, plus a pool of unitaries for
the arguments that must lie in ``U(A) + {0}``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import AlgebraShape, Element, as_shape, random_element, random_unitary

MAX_DEPTH = 60

# 32 equally spaced points on the unit circle plus the exact quarter points
MU_NET: tuple[complex, ...] = tuple(
    cmath.exp(2j * math.pi * k / 32) for k in range(32)) + (1 + 0j, -1 + 0j, 1j, -1j)


def mu_choices(i: int, count: int = 4) -> list[complex]:
    """Deterministic, well spread selection of ``count`` points of MU_NET."""
    n = len(MU_NET)
    return [MU_NET[(7 * i + 9 * j) % n] for j in range(count)]


@dataclass(frozen=True)
class SampleSet:
    base_points: tuple[Element, ...]
    depth: int = 40
    unitaries: tuple[Element, ...] = field(default=())

    def __post_init__(self):
        if not self.base_points:
            raise ValueError("sample set is empty")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"orbit depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        for x in self.base_points:
            if x.norm == 0.0:
                raise ValueError("base points must be nonzero")
        object.__setattr__(self, "base_points", tuple(self.base_points))
        object.__setattr__(self, "unitaries", tuple(self.unitaries))

    @property
    def shape(self) -> AlgebraShape:
        return self.base_points[0].shape

    def __len__(self):
        return len(self.base_points)

    def orbit(self, k: int) -> list[Element]:
        """The points ``3^k x`` for every base point ``x``."""
        if not 0 <= k <= self.depth:
            raise ValueError(f"orbit level {k} outside [0, {self.depth}]")
        return [x * 3.0 ** k for x in self.base_points]

    def points(self, levels: Sequence[int] = (0,)) -> list[Element]:
        out = []
        for k in levels:
            out.extend(self.orbit(k))
        return out

    def restrict(self, n: int) -> "SampleSet":
        return SampleSet(self.base_points[:n], self.depth, self.unitaries)


def make_samples(shape, count: int, seed, depth: int = 40, n_unitaries: int = 8,
                 scale_range: tuple[float, float] = (0.5, 4.0)) -> SampleSet:
    """Random base points with norms spread over ``scale_range`` times a Ginibre draw."""
    shape = as_shape(shape)
    rng = np.random.default_rng(seed)
    lo, hi = scale_range
    pts = []
    for _ in range(count):
        x = random_element(shape, rng)
        pts.append(x * float(np.exp(rng.uniform(math.log(lo), math.log(hi)))))
    us = [random_unitary(shape, rng) for _ in range(n_unitaries)]
    return SampleSet(tuple(pts), depth, tuple(us))
