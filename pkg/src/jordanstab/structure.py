"""Structural decompositions of elements.

* self-adjoint splitting ``x = x1 + i x2``;
* a four-term unitary decomposition ``x = sum c_j u_j`` built from
  ``a = (u + u*)/2`` with ``u = a + i sqrt(e - a^2)`` for each self-adjoint
  part scaled to norm one;
* invertible self-adjoint approximation of a norm-one self-adjoint element by
  eigenvalue surgery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    TAU_SA,
    Element,
    NotSelfAdjoint,
    adjoint,
    herm_eig,
    is_self_adjoint,
    op_norm,
    sqrt_psd,
    unit,
)


@dataclass(frozen=True)
class UnitaryDecomposition:
    terms: tuple[tuple[complex, Element], ...]

    def reconstruct(self) -> Element:
        coeff, u = self.terms[0]
        total = coeff * u
        for coeff, u in self.terms[1:]:
            total = total + coeff * u
        return total

    def coefficient_mass(self) -> float:
        return sum(abs(c) for c, _ in self.terms)

    def __len__(self):
        return len(self.terms)


def split_self_adjoint(x: Element) -> tuple[Element, Element]:
    """Return self-adjoint ``(x1, x2)`` with ``x = x1 + i*x2``."""
    xs = adjoint(x)
    # multiplying by -0.5j is exact, so x2 is exactly Hermitian
    return (x + xs) * 0.5, (x - xs) * -0.5j


def _unitary_from_contraction(a: Element) -> Element:
    e = unit(a.shape)
    return a + 1j * sqrt_psd(e - a @ a)


def unitary_decompose(x: Element) -> UnitaryDecomposition:
    """Write ``x`` as a combination of at most four unitaries.

    A self-adjoint part that is exactly zero contributes no terms.
    """
    parts = split_self_adjoint(x)
    terms = []
    for part, phase in zip(parts, (1.0, 1j)):
        size = op_norm(part)
        if size == 0.0:
            continue
        u = _unitary_from_contraction(part / size)
        c = phase * size / 2
        terms.append((c, u))
        terms.append((c, adjoint(u)))
    if not terms:
        raise ValueError("cannot decompose the zero element")
    return UnitaryDecomposition(tuple(terms))


def rr0_approximate(v: Element, eps: float, tau: float = 1e-10) -> Element:
    """Invertible self-adjoint element of norm one within ``eps`` of ``v``.

    Eigenvalues in ``(-eps/2, eps/2)`` are pushed to ``sign(lam) * eps/2``
    (zero goes to ``+eps/2``) and the result is rescaled to norm one. If no
    eigenvalue needs moving ``v`` itself is returned.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if not is_self_adjoint(v, TAU_SA):
        raise NotSelfAdjoint("rr0_approximate needs a self-adjoint element")
    if abs(op_norm(v) - 1) > tau:
        raise ValueError(f"expected a norm-one element, got norm {op_norm(v)!r}")
    dec = herm_eig(v)
    half = eps / 2
    if all(np.min(np.abs(lam)) >= half for lam in dec.eigenvalues):
        return v
    shifted = [np.where(np.abs(lam) < half, np.where(lam < 0, -half, half), lam)
               for lam in dec.eigenvalues]
    top = max(float(np.max(np.abs(lam))) for lam in shifted)
    new = [lam / top for lam in shifted]
    blocks = []
    for lam, u in zip(new, dec.eigenvectors):
        m = (u * lam) @ u.conj().T
        blocks.append((m + m.conj().T) / 2)
    return Element._raw(v.shape, blocks)
