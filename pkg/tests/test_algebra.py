import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jordanstab.algebra import (
    AlgebraShape,
    ConvergenceError,
    Element,
    NotSelfAdjoint,
    ShapeMismatch,
    adjoint,
    commutator_norm,
    element,
    func_calc,
    herm_eig,
    is_central,
    is_invertible,
    is_self_adjoint,
    is_unitary,
    jacobi_eigh,
    jordan_product,
    op_norm,
    random_element,
    random_self_adjoint,
    random_unitary,
    singular_values,
    sqrt_psd,
    unit,
    zero,
)

from conftest import SHAPES

seeds = st.integers(0, 2**32 - 1)
shapes = st.sampled_from(SHAPES)


def np_norm(x: Element) -> float:
    return max(np.linalg.norm(b, 2) for b in x.blocks)


# frozen values worked out by hand
def test_frozen_norms():
    a = element((2,), [[[3, 0], [4, 0]]])
    assert op_norm(a) == pytest.approx(5.0, rel=1e-15)
    d = element((1, 2), [[[-7]], np.diag([2, 3j])])
    assert op_norm(d) == pytest.approx(7.0, rel=1e-15)
    # [[1,1],[0,1]] has largest singular value the golden ratio
    j = element((2,), [[[1, 1], [0, 1]]])
    assert op_norm(j) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-14)


def test_frozen_eigenvalues():
    # Pauli-y has eigenvalues -1, 1
    lam, v = jacobi_eigh(np.array([[0, -1j], [1j, 0]]))
    np.testing.assert_allclose(lam, [-1, 1], atol=1e-15)
    # tridiagonal (2,-1) of order 3: 2 - sqrt(2), 2, 2 + sqrt(2)
    t = np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2]], dtype=complex)
    lam, _ = jacobi_eigh(t)
    np.testing.assert_allclose(lam, [2 - math.sqrt(2), 2, 2 + math.sqrt(2)], atol=1e-14)


def test_shape_validation():
    with pytest.raises(ValueError):
        AlgebraShape(())
    with pytest.raises(ValueError):
        AlgebraShape((0, 2))
    with pytest.raises(ShapeMismatch):
        element((2, 3), [np.eye(2)])
    with pytest.raises(ShapeMismatch):
        element((2,), [np.eye(3)])
    with pytest.raises(ValueError):
        element((1,), [[[math.nan]]])
    with pytest.raises(ShapeMismatch):
        unit((2,)) + unit((3,))
    assert AlgebraShape((2, 3)).dimension == 13


def test_blocks_are_frozen():
    x = random_element((2,), 0)
    with pytest.raises(ValueError):
        x.blocks[0][0, 0] = 1.0


def test_list_round_trip():
    x = random_element((2, 3), 5)
    assert Element.from_list(x.shape, x.to_list()) == x


@given(seeds, shapes)
def test_norm_matches_numpy(seed, shape):
    x = random_element(shape, seed) * 3.7
    assert op_norm(x) == pytest.approx(np_norm(x), rel=1e-12)


@given(seeds, shapes)
def test_eigh_matches_numpy(seed, shape):
    a = random_self_adjoint(shape, seed)
    dec = herm_eig(a)
    for lam, u, b in zip(dec.eigenvalues, dec.eigenvectors, a.blocks):
        np.testing.assert_allclose(lam, np.linalg.eigvalsh(b), atol=1e-12 * max(1, np_norm(a)))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-12)
    assert op_norm(dec.reconstruct() - a) <= 1e-12 * max(1.0, a.norm)


@given(seeds, shapes)
def test_star_algebra_axioms(seed, shape):
    rng = np.random.default_rng(seed)
    x, y, z = (random_element(shape, rng) for _ in range(3))
    c = complex(rng.standard_normal(), rng.standard_normal())
    tol = 1e-12 * (1 + x.norm) * (1 + y.norm) * (1 + z.norm)
    assert adjoint(adjoint(x)) == x
    assert op_norm(adjoint(x @ y) - adjoint(y) @ adjoint(x)) <= tol
    assert op_norm(adjoint(c * x) - c.conjugate() * adjoint(x)) <= tol
    assert op_norm((x @ y) @ z - x @ (y @ z)) <= tol
    assert op_norm(x @ (y + z) - x @ y - x @ z) <= tol
    assert jordan_product(x, y) == jordan_product(y, x)


@given(seeds, shapes, st.floats(1e-3, 1e3))
def test_c_star_identity(seed, shape, s):
    x = random_element(shape, seed) * s
    n = x.norm
    assert abs((adjoint(x) @ x).norm - n * n) <= 1e-12 * n * n


def test_norm_handles_extreme_scales():
    x = random_element((2, 3), 1)
    n = x.norm
    assert op_norm(x * 1e200) == pytest.approx(n * 1e200, rel=1e-14)
    assert op_norm(x * 1e-200) == pytest.approx(n * 1e-200, rel=1e-14)
    assert op_norm(zero((2, 3))) == 0.0


def test_random_unitary_is_unitary(rng):
    for shape in SHAPES:
        u = random_unitary(shape, rng)
        assert is_unitary(u, 1e-13)
        assert op_norm(u) == pytest.approx(1.0, abs=1e-14)


def test_sqrt_psd(rng):
    for shape in SHAPES:
        y = random_element(shape, rng)
        p = adjoint(y) @ y
        r = sqrt_psd(p)
        assert is_self_adjoint(r, 1e-12)
        assert op_norm(r @ r - p) <= 1e-12 * max(1.0, p.norm)
        assert min(float(l.min()) for l in herm_eig(r).eigenvalues) >= -1e-12
    with pytest.raises(ValueError):
        sqrt_psd(-unit((2,)))


def test_non_self_adjoint_rejected():
    with pytest.raises(NotSelfAdjoint):
        herm_eig(element((2,), [[[0, 1], [0, 0]]]))


def test_func_calc_exp_matches_series():
    a = element((2,), [[[0, 1], [1, 0]]])
    e = func_calc(np.exp, a)
    want = np.array([[math.cosh(1), math.sinh(1)], [math.sinh(1), math.cosh(1)]])
    np.testing.assert_allclose(e.blocks[0], want, atol=1e-14)


def test_jacobi_sweep_cap():
    a = random_self_adjoint((3,), 2).blocks[0]
    with pytest.raises(ConvergenceError):
        jacobi_eigh(a, max_sweeps=0)


def test_predicates():
    e = unit((2, 3))
    assert is_unitary(e) and is_self_adjoint(e) and is_invertible(e)
    n = element((2,), [[[0, 1], [0, 0]]])
    assert not is_invertible(n)
    np.testing.assert_allclose(singular_values(n), [0, 1], atol=1e-15)
    probes = [random_element((2, 3), s) for s in range(10)]
    centre = element((2, 3), [2 * np.eye(2), -1j * np.eye(3)])
    assert is_central(centre, probes)
    assert commutator_norm(random_element((2, 3), 99), probes) > 0.1
