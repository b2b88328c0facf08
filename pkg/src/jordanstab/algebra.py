"""Finite-dimensional C*-algebras as direct sums of full complex matrix blocks.

An :class:`Element` of ``M_{n_1}(C) + ... + M_{n_k}(C)`` is stored as a tuple
of square complex arrays. Elements are immutable; every operation returns a
new element. The operator norm and all spectral functions go through a cyclic
Jacobi eigensolver for Hermitian blocks (:func:`herm_eig`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from numbers import Number
from typing import Callable, Iterable, Sequence

import numpy as np

TAU_SA = 1e-10
TAU_PSD = 1e-10
TAU_EIG = 1e-10

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_TOL = 1e-13


class ShapeMismatch(ValueError):
    pass


class NotSelfAdjoint(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class AlgebraShape:
    """Block dimensions of ``M_{n_1}(C) + ... + M_{n_k}(C)``."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims:
            raise ValueError("an algebra needs at least one block")
        if any(d < 1 for d in dims):
            raise ValueError(f"block dimensions must be positive, got {dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def dimension(self) -> int:
        """Complex dimension of the algebra."""
        return sum(d * d for d in self.block_dims)

    def __str__(self):
        return " + ".join(f"M{d}" for d in self.block_dims)


def as_shape(dims: AlgebraShape | Sequence[int]) -> AlgebraShape:
    if isinstance(dims, AlgebraShape):
        return dims
    return AlgebraShape(tuple(dims))


@dataclass(frozen=True, eq=False)
class Element:
    shape: AlgebraShape
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        shape = as_shape(self.shape)
        if len(self.blocks) != shape.n_blocks:
            raise ShapeMismatch(
                f"{len(self.blocks)} blocks given for shape {shape}")
        blocks = []
        for b, d in zip(self.blocks, shape.block_dims):
            arr = np.array(b, dtype=np.complex128)
            if arr.shape != (d, d):
                raise ShapeMismatch(f"block of shape {arr.shape}, expected {(d, d)}")
            if not np.all(np.isfinite(arr)):
                raise ValueError("element entries must be finite")
            arr.flags.writeable = False
            blocks.append(arr)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def _raw(cls, shape: AlgebraShape, blocks: Iterable[np.ndarray]) -> "Element":
        # Internal fast path: arrays are already complex, square and sized.
        el = object.__new__(cls)
        frozen = []
        for arr in blocks:
            if not np.all(np.isfinite(arr)):
                raise ValueError("element entries must be finite")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(el, "shape", shape)
        object.__setattr__(el, "blocks", tuple(frozen))
        return el

    def _check(self, other: "Element"):
        if not isinstance(other, Element):
            raise TypeError(f"expected Element, got {type(other).__name__}")
        if other.shape != self.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        self._check(other)
        return Element._raw(self.shape, (a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return Element._raw(self.shape, (-a for a in self.blocks))

    def __mul__(self, c):
        if isinstance(c, Element):
            return NotImplemented
        return scale(c, self)

    __rmul__ = __mul__

    def __truediv__(self, c):
        if isinstance(c, Element):
            return NotImplemented
        return Element._raw(self.shape, (a / complex(c) for a in self.blocks))

    def __matmul__(self, other):
        return mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, Element) or other.shape != self.shape:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))

    __hash__ = None

    @property
    def H(self) -> "Element":
        return adjoint(self)

    @cached_property
    def norm(self) -> float:
        return op_norm(self)

    def to_list(self) -> list:
        """Nested ``[[re, im], ...]`` lists, one matrix per block."""
        return [[[[z.real, z.imag] for z in row] for row in b] for b in self.blocks]

    @classmethod
    def from_list(cls, shape, data) -> "Element":
        blocks = [np.array([[complex(re, im) for re, im in row] for row in b]) for b in data]
        return cls(as_shape(shape), tuple(blocks))

    def __repr__(self):
        return f"Element({self.shape}, norm={self.norm:.6g})"


def element(shape, blocks) -> Element:
    return Element(as_shape(shape), tuple(blocks))


def unit(shape) -> Element:
    shape = as_shape(shape)
    return Element._raw(shape, (np.eye(d, dtype=np.complex128) for d in shape.block_dims))


def zero(shape) -> Element:
    shape = as_shape(shape)
    return Element._raw(shape, (np.zeros((d, d), dtype=np.complex128) for d in shape.block_dims))


def add(a: Element, b: Element) -> Element:
    a._check(b)
    return Element._raw(a.shape, (x + y for x, y in zip(a.blocks, b.blocks)))


def scale(c: Number, a: Element) -> Element:
    c = complex(c)
    return Element._raw(a.shape, (c * x for x in a.blocks))


def mul(a: Element, b: Element) -> Element:
    a._check(b)
    return Element._raw(a.shape, (x @ y for x, y in zip(a.blocks, b.blocks)))


def adjoint(a: Element) -> Element:
    return Element._raw(a.shape, (x.conj().T.copy() for x in a.blocks))


def jordan_product(a: Element, b: Element) -> Element:
    """``ab + ba``."""
    a._check(b)
    return Element._raw(a.shape, (x @ y + y @ x for x, y in zip(a.blocks, b.blocks)))


# -- spectral tools ---------------------------------------------------------

@dataclass(frozen=True)
class SpectralDecomposition:
    shape: AlgebraShape
    eigenvalues: tuple[np.ndarray, ...]
    eigenvectors: tuple[np.ndarray, ...]

    def reconstruct(self, g: Callable[[np.ndarray], np.ndarray] | None = None) -> Element:
        blocks = []
        for lam, u in zip(self.eigenvalues, self.eigenvectors):
            vals = lam if g is None else np.asarray(g(lam), dtype=np.complex128)
            blocks.append((u * vals) @ u.conj().T)
        return Element._raw(self.shape, blocks)


def jacobi_eigh(a: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS,
                rel_tol: float = JACOBI_REL_TOL,
                vectors: bool = True) -> tuple[np.ndarray, np.ndarray | None]:
    """Cyclic Jacobi eigensolver for one complex Hermitian matrix.

    The input is assumed Hermitian; only its Hermitian part is used.
    Returns ascending eigenvalues and a unitary matrix of eigenvectors
    (columns). Raises :class:`ConvergenceError` if the off-diagonal
    Frobenius mass is still above ``rel_tol * ||a||_F`` after
    ``max_sweeps`` sweeps. With ``vectors=False`` the rotations are not
    accumulated and ``None`` is returned in place of the eigenvectors.
    """
    # Plain Python scalars: for desk-scale blocks numpy call overhead dominates.
    h = np.asarray(a, dtype=np.complex128)
    h = (h + h.conj().T) / 2
    n = h.shape[0]
    a = h.tolist()
    v = np.eye(n, dtype=np.complex128).tolist() if vectors else []
    rows = range(n)
    target = rel_tol * float(np.linalg.norm(h))
    for _ in range(max_sweeps + 1):
        off = math.sqrt(sum(abs(a[i][j]) ** 2 for i in rows for j in rows if i != j))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                ph = apq / r
                phc = ph.conjugate()
                tau = (a[q][q].real - a[p][p].real) / (2 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.hypot(1.0, tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                # G = diag(1, conj(ph)) @ [[c, s], [-s, c]]; a <- G^H a G, v <- v G
                for row in a:
                    xp, xq = row[p], row[q]
                    row[p] = c * xp - s * phc * xq
                    row[q] = s * xp + c * phc * xq
                rp, rq = a[p], a[q]
                for k in rows:
                    xp, xq = rp[k], rq[k]
                    rp[k] = c * xp - s * ph * xq
                    rq[k] = s * xp + c * ph * xq
                rp[q] = rq[p] = 0j
                rp[p] = complex(rp[p].real)
                rq[q] = complex(rq[q].real)
                for row in v:
                    xp, xq = row[p], row[q]
                    row[p] = c * xp - s * phc * xq
                    row[q] = s * xp + c * phc * xq
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    lam = np.array([a[i][i].real for i in rows])
    order = np.argsort(lam, kind="stable")
    if not vectors:
        return lam[order], None
    return lam[order], np.array(v, dtype=np.complex128)[:, order]


def _frob(a: Element) -> float:
    return math.sqrt(sum(float(np.sum(np.abs(b) ** 2)) for b in a.blocks))


def _require_self_adjoint(a: Element, tau: float):
    dev = math.sqrt(sum(float(np.sum(np.abs(b - b.conj().T) ** 2)) for b in a.blocks))
    if dev > tau * max(1.0, _frob(a)):
        raise NotSelfAdjoint(f"||a - a*||_F = {dev:.3g} exceeds tolerance")


def herm_eig(a: Element, tau_sa: float = TAU_SA) -> SpectralDecomposition:
    _require_self_adjoint(a, tau_sa)
    vals, vecs = zip(*(jacobi_eigh(b) for b in a.blocks))
    return SpectralDecomposition(a.shape, tuple(vals), tuple(vecs))


def op_norm(a: Element) -> float:
    """C*-norm: the largest singular value over all blocks."""
    best = 0.0
    for b in a.blocks:
        if not b.any():
            continue
        # power-of-two prescaling is exact and keeps b*b clear of overflow
        k = math.frexp(float(np.abs(b).max()))[1]
        c = np.ldexp(b.real, -k) + 1j * np.ldexp(b.imag, -k)
        lam, _ = jacobi_eigh(c.conj().T @ c, vectors=False)
        best = max(best, math.ldexp(math.sqrt(max(lam[-1], 0.0)), k))
    return best


def singular_values(a: Element) -> np.ndarray:
    vals = [np.sqrt(np.clip(jacobi_eigh(b.conj().T @ b, vectors=False)[0], 0.0, None))
            for b in a.blocks]
    return np.sort(np.concatenate(vals))


def func_calc(g: Callable[[np.ndarray], np.ndarray], a: Element,
              tau_sa: float = TAU_SA) -> Element:
    """Apply a real function to a self-adjoint element through its eigenvalues."""
    return herm_eig(a, tau_sa).reconstruct(g)


def sqrt_psd(a: Element, tau_psd: float = TAU_PSD, tau_sa: float = TAU_SA) -> Element:
    dec = herm_eig(a, tau_sa)
    floor = -tau_psd * max(1.0, max(float(np.max(np.abs(l))) for l in dec.eigenvalues))
    for lam in dec.eigenvalues:
        if lam[0] < floor:
            raise ValueError(f"element is not positive: eigenvalue {lam[0]:.3g}")
    return dec.reconstruct(lambda lam: np.sqrt(np.clip(lam, 0.0, None)))


# -- predicates -------------------------------------------------------------

def is_self_adjoint(a: Element, tau: float = TAU_SA) -> bool:
    return op_norm(a - adjoint(a)) <= tau


def is_unitary(a: Element, tau: float = TAU_SA) -> bool:
    e = unit(a.shape)
    return op_norm(adjoint(a) @ a - e) <= tau and op_norm(a @ adjoint(a) - e) <= tau


def is_invertible(a: Element, tau: float = TAU_SA) -> bool:
    return float(singular_values(a)[0]) > tau


def commutator_norm(a: Element, probes: Iterable[Element]) -> float:
    return max((op_norm(a @ p - p @ a) for p in probes), default=0.0)


def is_central(a: Element, probes: Iterable[Element], tau: float = TAU_SA) -> bool:
    return commutator_norm(a, probes) <= tau


# -- random elements ----------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, d: int) -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)


def random_element(shape, seed=None) -> Element:
    rng = _rng(seed)
    shape = as_shape(shape)
    return Element._raw(shape, [_ginibre(rng, d) for d in shape.block_dims])


def random_unitary(shape, seed=None) -> Element:
    """Haar-distributed unitary per block (QR of a Ginibre matrix, phases fixed)."""
    rng = _rng(seed)
    shape = as_shape(shape)
    blocks = []
    for d in shape.block_dims:
        q, r = np.linalg.qr(_ginibre(rng, d))
        diag = np.diag(r)
        blocks.append(q * (diag / np.abs(diag)))
    return Element._raw(shape, blocks)


def random_self_adjoint(shape, seed=None) -> Element:
    g = random_element(shape, seed)
    return Element._raw(g.shape, [(b + b.conj().T) / 2 for b in g.blocks])
