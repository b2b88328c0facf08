import math

import pytest

from jordanstab.algebra import AlgebraShape, op_norm, random_element
from jordanstab.control import lipschitz_L, one_minus_L, power_control
from jordanstab.fixedpoint import (
    OrbitTable,
    RescaledMap,
    alternative_audit,
    apply_J,
    contraction_witness,
    gen_metric,
    orbit_distances,
)
from jordanstab.hyers import LimitMap
from jordanstab.mappings import Mapping, PerturbationSpec, make_jordan_hom, make_perturbed, make_spec
from jordanstab.sampling import make_samples

D = AlgebraShape((2, 3))
T, P = 0.1, 0.5
CF6 = power_control(T * (3 ** (1 - P) - 1), P, 6)


@pytest.fixture(scope="module")
def setting():
    h0 = make_jordan_hom(make_spec(D, seed=5))
    f = make_perturbed(h0, PerturbationSpec("radial", T, P, seed=6))
    samples = make_samples(D, 12, 7, depth=22)
    return h0, f, samples


def test_metric_frozen_value(setting):
    h0, f, samples = setting
    # ||f - h0|| = t ||x||^p and phi(x, 0...) = theta ||x||^p, so d = t / theta exactly
    d = gen_metric(f, h0, samples, CF6)
    assert d == pytest.approx(1 / (3 ** (1 - P) - 1), rel=1e-12)
    assert gen_metric(h0, h0, samples, CF6) == 0.0


def test_metric_infinite_for_zero_control(setting):
    h0, f, samples = setting
    zero_cf = power_control(0.0, P, 6)
    assert gen_metric(f, h0, samples, zero_cf) == math.inf
    assert gen_metric(h0, h0, samples, zero_cf) == 0.0


def test_metric_axioms(setting):
    h0, f, samples = setting
    g = make_perturbed(h0, PerturbationSpec("hashed-radial", 0.05, P, seed=1))
    pts = samples.base_points
    dfg, dgf = gen_metric(f, g, pts, CF6), gen_metric(g, f, pts, CF6)
    assert dfg == pytest.approx(dgf, rel=1e-15)
    assert dfg <= gen_metric(f, h0, pts, CF6) + gen_metric(h0, g, pts, CF6) + 1e-12


def test_rescaled_map(setting):
    _, f, _ = setting
    x = random_element(D, 0)
    J2 = apply_J(apply_J(f))
    assert isinstance(J2, RescaledMap) and J2.m == 2
    assert op_norm(J2(x) - f(x * 9.0) / 9.0) == 0.0
    with pytest.raises(OverflowError):
        RescaledMap(f, 61)


def test_contraction_witness(setting):
    h0, f, samples = setting
    c = contraction_witness(f, h0, samples, CF6, levels=range(3))
    assert c.passed
    # radial perturbations scale exactly, so the witness is tight
    assert c.lhs == pytest.approx(c.rhs, rel=1e-10)
    with pytest.raises(ValueError):
        contraction_witness(f, h0, samples.restrict(2), CF6, levels=[22])


def test_orbit_distances_decay_at_rate_L(setting):
    _, f, samples = setting
    recs = orbit_distances(f, samples, CF6, 20, atol=1e-13)
    L = lipschitz_L(CF6)
    # d(f, Jf) = t (1 - L) / theta for the radial family; at orbit level 20 the
    # planted part cancels at size 3^20 ||x|| eps, hence the looser tolerance
    assert recs[0].distance == pytest.approx(T * (1 - L) / CF6.params.theta, rel=1e-8)
    for r in recs[1:]:
        assert r.ratio == pytest.approx(L, rel=1e-6)
    with pytest.raises(ValueError):
        orbit_distances(f, samples, CF6, 22)


def test_orbit_table_indexing(setting):
    _, f, samples = setting
    tab = OrbitTable(f, samples.restrict(2), 3)
    x = samples.base_points[1]
    assert op_norm(tab.J(1, 2, 1) - f(x * 27.0) / 9.0) <= 1e-15 * op_norm(f(x * 27.0))


def test_alternative_audit(setting):
    h0, f, samples = setting
    H = LimitMap(f)
    g = make_perturbed(f, PerturbationSpec("radial", 0.02, P, seed=9))
    audit = alternative_audit(f, samples, CF6, 20, H, g)
    assert audit.passed, [c for c in audit.checks if not c.passed]
    # the distance bound is attained for the radial family
    assert audit.distance_bound.lhs == pytest.approx(audit.distance_bound.rhs, rel=1e-9)


def test_alternative_audit_flags_second_start_outside_lambda(setting):
    h0, _, samples = setting
    # under a zero control every nonzero difference is infinitely far
    zero_cf = power_control(0.0, P, 6)
    g = make_perturbed(h0, PerturbationSpec("radial", 0.1, P, seed=2))
    audit = alternative_audit(h0, samples, zero_cf, 20, LimitMap(h0), g)
    assert not audit.lambda_membership.passed
    assert audit.finiteness.passed
