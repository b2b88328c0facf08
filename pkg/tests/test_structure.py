import numpy as np
import pytest
from hypothesis import given, strategies as st

from jordanstab.algebra import (
    NotSelfAdjoint,
    adjoint,
    element,
    herm_eig,
    is_self_adjoint,
    is_unitary,
    op_norm,
    random_element,
    random_self_adjoint,
    singular_values,
    unit,
    zero,
)
from jordanstab.mappings import in_I1
from jordanstab.structure import rr0_approximate, split_self_adjoint, unitary_decompose

from conftest import SHAPES

seeds = st.integers(0, 2**32 - 1)
shapes = st.sampled_from(SHAPES)


@given(seeds, shapes)
def test_split_is_exact_and_hermitian(seed, shape):
    x = random_element(shape, seed)
    x1, x2 = split_self_adjoint(x)
    assert adjoint(x1) == x1
    assert adjoint(x2) == x2
    assert op_norm(x1 + 1j * x2 - x) <= 1e-15 * max(1.0, x.norm)


@given(seeds, shapes, st.floats(1e-3, 1e3))
def test_unitary_decomposition(seed, shape, s):
    x = random_element(shape, seed) * s
    d = unitary_decompose(x)
    assert len(d) == 4
    assert all(is_unitary(u, 1e-9) for _, u in d.terms)
    assert op_norm(d.reconstruct() - x) <= 1e-9 * max(1.0, x.norm)
    # each self-adjoint part contributes coefficient mass equal to its norm
    x1, x2 = split_self_adjoint(x)
    assert d.coefficient_mass() == pytest.approx(x1.norm + x2.norm, rel=1e-14)


def test_decomposition_drops_zero_parts():
    a = random_self_adjoint((2, 3), 3)
    assert len(unitary_decompose(a)) == 2
    assert len(unitary_decompose(1j * a)) == 2
    with pytest.raises(ValueError):
        unitary_decompose(zero((2,)))


def test_decomposition_of_unit_is_unit():
    d = unitary_decompose(unit((3,)))
    assert op_norm(d.reconstruct() - unit((3,))) <= 1e-15


def _unit_sa(shape, seed):
    s = random_self_adjoint(shape, seed)
    return s / s.norm


@given(seeds, shapes, st.floats(1e-8, 0.49))
def test_rr0_in_I1_within_eps(seed, shape, eps):
    v = _unit_sa(shape, seed)
    z = rr0_approximate(v, eps)
    assert in_I1(z)
    assert float(singular_values(z)[0]) >= eps / 2 * (1 - 1e-12)
    assert op_norm(z - v) <= eps


def test_rr0_singular_input():
    # diag(1, 0): the zero eigenvalue moves to eps/2
    v = element((2,), [np.diag([1.0, 0.0])])
    z = rr0_approximate(v, 1e-4)
    np.testing.assert_allclose(z.blocks[0], np.diag([1.0, 5e-5]), atol=1e-16)
    # negative small eigenvalues keep their sign
    w = element((2,), [np.diag([-1.0, -1e-9])])
    np.testing.assert_allclose(rr0_approximate(w, 1e-2).blocks[0], np.diag([-1.0, -5e-3]),
                               atol=1e-16)


def test_rr0_identity_when_already_invertible():
    v = element((2,), [np.diag([1.0, -0.5])])
    assert rr0_approximate(v, 0.1) is v


def test_rr0_validation():
    v = element((2,), [np.diag([1.0, 0.0])])
    with pytest.raises(ValueError):
        rr0_approximate(v, 0.5)
    with pytest.raises(ValueError):
        rr0_approximate(v * 2.0, 0.1)
    with pytest.raises(NotSelfAdjoint):
        rr0_approximate(element((2,), [[[0, 1], [0, 0]]]), 0.1)


def test_rr0_output_is_exactly_hermitian(rng):
    v = _unit_sa((3,), rng)
    z = rr0_approximate(v, 0.3)
    assert adjoint(z) == z
    assert is_self_adjoint(z, 0.0)
    assert min(abs(l).min() for l in herm_eig(z).eigenvalues) >= 0.15 * (1 - 1e-12)
