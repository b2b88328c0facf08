"""The audit and verification pipelines behind the ``stab`` command.

Each pipeline builds its mapping and samples from an :class:`ExperimentConfig`,
registers every inequality it checks in a :class:`StabilityReport` and ends
with one verdict per clause. Randomness comes from independent streams
``default_rng([seed, stream])`` so adding a check to one stage never shifts
the draws of another.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraShape,
    Element,
    adjoint,
    herm_eig,
    is_self_adjoint,
    is_unitary,
    jordan_product,
    op_norm,
    random_element,
    random_self_adjoint,
    random_unitary,
    singular_values,
    sqrt_psd,
    unit,
)
from .checks import FAIL, NOT_APPLICABLE, PASS, Check, SampleCheck
from .config import ConfigError, ExperimentConfig
from .control import (
    ControlFunction,
    fp_bound_constant,
    lipschitz_L,
    phi,
    phi_tilde,
    power_control,
)
from .fixedpoint import alternative_audit, apply_J, contraction_witness, gen_metric
from .hyers import HyersResult, LimitMap, hyers_limit, unitality_check, verify_fp_bound, verify_jensen_bound
from .mappings import (
    Mapping,
    PerturbationSpec,
    additivity_defect,
    fit_theta,
    homogeneity_defect,
    jordan_defect,
    make_jordan_hom,
    make_perturbed,
    make_spec,
    premise21_defect,
    star_defect,
)
from .report import StabilityReport
from .sampling import SampleSet, make_samples, mu_choices
from .structure import rr0_approximate, split_self_adjoint, unitary_decompose

log = logging.getLogger(__name__)

STREAMS = {"samples": 1, "mapping": 2, "direction": 3, "probes": 4, "premise": 5,
           "density": 6, "tweak": 7, "algebra": 8}

DENSITY_EPS = (1e-2, 1e-4, 1e-6)


def stream(cfg: ExperimentConfig, name: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, STREAMS[name]])


def _seed_from(cfg: ExperimentConfig, name: str) -> int:
    return int(stream(cfg, name).integers(2**31))


@dataclass
class Setup:
    cfg: ExperimentConfig
    domain: AlgebraShape
    h0: Mapping
    f: Mapping
    samples: SampleSet
    probes: list[Element]


def build(cfg: ExperimentConfig) -> Setup:
    domain = AlgebraShape(tuple(cfg.domain))
    mseed = cfg.mapping_seed if cfg.mapping_seed is not None else _seed_from(cfg, "mapping")
    try:
        spec = make_spec(domain, seed=mseed, transpose=cfg.transpose,
                         permutation=cfg.permutation, conjugate=cfg.conjugate, scale=cfg.scale)
        pseed = cfg.pert_seed if cfg.pert_seed is not None else _seed_from(cfg, "direction")
        pert = PerturbationSpec(cfg.perturbation, cfg.pert_theta, cfg.pert_p, seed=pseed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    h0 = make_jordan_hom(spec)
    f = make_perturbed(h0, pert)
    samples = make_samples(domain, cfg.count, stream(cfg, "samples"), depth=cfg.depth)
    prng = stream(cfg, "probes")
    probes = [random_element(h0.codomain, prng) for _ in range(cfg.probes)]
    return Setup(cfg, domain, h0, f, samples, probes)


def _control(cfg: ExperimentConfig, f: Mapping, samples: SampleSet, kind: str) -> ControlFunction:
    arity = 3 if kind == "jensen" else 6
    if cfg.control_theta is not None:
        return power_control(cfg.control_theta, cfg.control_p, arity)
    theta = fit_theta(f, samples, cfg.control_p, kind, atol=cfg.tolerances.zero_atol)
    if math.isinf(theta):
        raise ArithmeticError(f"no finite theta fits the {kind} defects on the samples")
    return power_control(theta, cfg.control_p, arity)


def _pairs(samples: SampleSet, count: int):
    pts = samples.base_points
    n = len(pts)
    for i in range(min(count, n)):
        yield i, pts[i], pts[(i + 1) % n]


def _unit_self_adjoint(shape, rng) -> Element:
    s = random_self_adjoint(shape, rng)
    return s / s.norm


def singular_unit_self_adjoint(shape, rng) -> Element:
    """Random norm-one self-adjoint element with an exact zero eigenvalue."""
    dec = herm_eig(random_self_adjoint(shape, rng))
    lam = [l.copy() for l in dec.eigenvalues]
    b, k = min(((b, int(np.argmin(np.abs(l)))) for b, l in enumerate(lam)),
               key=lambda bk: abs(lam[bk[0]][bk[1]]))
    lam[b][k] = 0.0
    top = max(float(np.max(np.abs(l))) for l in lam)
    blocks = []
    for l, u in zip(lam, dec.eigenvectors):
        m = (u * (l / top)) @ u.conj().T
        blocks.append((m + m.conj().T) / 2)
    return Element._raw(dec.shape, blocks)


# -- hypothesis and conclusion audits ------------------------------------------

def _premises(rep: StabilityReport, s: Setup, path: str) -> dict[str, str]:
    cfg, tol, f = s.cfg, s.cfg.tolerances, s.f
    rng = stream(cfg, "premise")
    rows, worst = [], 0.0
    for i, y, _ in _pairs(s.samples, cfg.premise_pairs):
        if path == "unitary":
            u = random_unitary(s.domain, rng)
        else:
            u = rr0_approximate(_unit_self_adjoint(s.domain, rng), tol.rr0_eps)
        for n in range(cfg.premise_depth + 1):
            d = premise21_defect(f, u, y, n, path)
            rel = d / (3.0 ** n * max(1.0, y.norm))
            rows.append({"sample": f"{i}:{n}", "pair": i, "n": n, "defect": d, "relative": rel})
            worst = max(worst, rel)
    rep.tables["premise-orbit"] = rows
    label = "unitary u" if path == "unitary" else "invertible self-adjoint u of norm one"
    ids = {}
    ids["orbit-jordan-identity"] = rep.add(Check(
        "premise:orbit-jordan-identity", worst, tol.premise,
        note=f"max ||f(3^n(uy+yu)) - f(3^n u)f(y) - f(y)f(3^n u)|| / (3^n max(1,||y||)), {label}"))
    zero_el = s.samples.base_points[0] * 0.0
    ids["f(0)=0"] = rep.add(Check("premise:f(0)=0", op_norm(f(zero_el)), 0.0))
    cf3 = _control(cfg, f, s.samples, "jensen")
    rep.values["theta_jensen"] = cf3.params.theta
    ids["jensen-control"] = rep.add(Check(
        "premise:jensen-control-finite", cf3.params.theta, math.inf,
        note="fitted theta of the Jensen-type defect; finite theta gives a summable control"))
    T_e = hyers_limit(f, unit(s.domain), tol.hyers_rtol)
    rep.values["T(e)_converged"] = T_e.converged
    uv = unitality_check(T_e.value, s.probes, tol.unitality)
    ids["unitality:unitary"] = rep.add(uv.unitary)
    ids["unitality:central"] = rep.add(uv.central)
    return ids


def _conclusion_checks(rep: StabilityReport, s: Setup, asserted: bool,
                       extra: list[Check] = ()) -> list[str]:
    cfg, tol, f = s.cfg, s.cfg.tolerances, s.f
    jd, sd = 0.0, 0.0
    for _, x, y in _pairs(s.samples, cfg.defect_pairs):
        jd = max(jd, jordan_defect(f, x, y))
        sd = max(sd, star_defect(f, x))
    T = LimitMap(f, tol.hyers_rtol)
    tf = max(op_norm(T(x) - f(x)) / max(1.0, x.norm)
             for _, x, _ in _pairs(s.samples, cfg.defect_pairs))
    checks = [Check("conclusion:T=f", tf, tol.conclusion, note="max ||T(x) - f(x)|| / max(1,||x||)"),
              Check("conclusion:jordan", jd, tol.conclusion, note="max ||f(xy+yx) - f(x)f(y) - f(y)f(x)||"),
              Check("conclusion:star", sd, tol.conclusion, note="max ||f(x*) - f(x)*||"),
              *extra]
    if not asserted:
        rep.values["conclusion_measured"] = {c.name: c.lhs for c in checks}
        return []
    return [rep.add(c) for c in checks]


def _settle(rep: StabilityReport, premise_ids: dict[str, str], conclusion: list[str]):
    broken = [name for name, cid in premise_ids.items() if not rep.check(cid)["passed"]]
    rep.values["broken_hypotheses"] = broken
    if broken:
        rep.set_verdict("conclusion", NOT_APPLICABLE, [premise_ids[b] for b in broken],
                        note="hypotheses not met: " + ", ".join(broken))
    else:
        rep.verdict_from("conclusion", conclusion)
    rep.set_verdict("hypotheses", PASS if not broken else NOT_APPLICABLE,
                    list(premise_ids.values()))


def run_audit_theorem21(cfg: ExperimentConfig) -> StabilityReport:
    start = time.perf_counter()
    s = build(cfg)
    rep = StabilityReport(cfg.kind, cfg.to_dict())
    ids = _premises(rep, s, "unitary")
    ok = all(rep.check(c)["passed"] for c in ids.values())
    _settle(rep, ids, _conclusion_checks(rep, s, ok))
    rep.wall_clock = time.perf_counter() - start
    rep.finalize()
    return rep


def density_surrogate(f: Mapping, v: Element, y: Element, eps_list=DENSITY_EPS) -> dict:
    """Continuity witness at a singular self-adjoint ``v``.

    For each eps, ``z = rr0_approximate(v, eps)`` and the gap
    ``max(||f(zy + yz) - f(vy + yv)||, ||f(z) - f(v)||)`` is recorded; for a
    continuous linear f it shrinks in proportion to eps. ``slope_dev`` is the
    worst deviation of the observed log-log slope from 1.
    """
    fv, fvy = f(v), f(jordan_product(v, y))
    d_v = premise21_defect(f, v, y, 0, check=False)
    gaps, premise_gaps = [], []
    for eps in eps_list:
        z = rr0_approximate(v, eps)
        gaps.append(max(op_norm(f(jordan_product(z, y)) - fvy), op_norm(f(z) - fv)))
        premise_gaps.append(abs(premise21_defect(f, z, y, 0, path="rr0") - d_v))
    slopes, dev = [], 0.0
    for (e1, g1), (e2, g2) in zip(zip(eps_list, gaps), zip(eps_list[1:], gaps[1:])):
        if g1 == 0.0 and g2 == 0.0:
            slopes.append(None)
            continue
        if g1 == 0.0 or g2 == 0.0:
            slopes.append(None)
            dev = math.inf
            continue
        sl = math.log(g1 / g2) / math.log(e1 / e2)
        slopes.append(sl)
        dev = max(dev, abs(sl - 1))
    return {"gaps": gaps, "premise_gaps": premise_gaps, "slopes": slopes, "slope_dev": dev}


def three_case_routes(f: Mapping, x: Element, y: Element) -> tuple[float, float]:
    """Jordan defect of f at (x, y), directly and through the normalized parts.

    The second route expands ``x = ||x1|| a1 + i ||x2|| a2`` with norm-one
    self-adjoint ``a_k`` and applies f term by term, dropping zero parts.
    """
    direct = jordan_defect(f, x, y)
    fy = f(y)
    left = right = None
    for part, phase in zip(split_self_adjoint(x), (1.0, 1j)):
        size = op_norm(part)
        if size == 0.0:
            continue
        a = part / size
        fa = f(a)
        c = phase * size
        l_term = c * f(jordan_product(a, y))
        r_term = c * (fa @ fy + fy @ fa)
        left = l_term if left is None else left + l_term
        right = r_term if right is None else right + r_term
    return direct, op_norm(left - right)


def run_audit_theorem23(cfg: ExperimentConfig) -> StabilityReport:
    start = time.perf_counter()
    s = build(cfg)
    tol = cfg.tolerances
    rep = StabilityReport(cfg.kind, cfg.to_dict())
    ids = _premises(rep, s, "rr0")

    rng = stream(cfg, "density")
    rows, worst = [], 0.0
    for i, y, _ in _pairs(s.samples, cfg.density_points):
        v = singular_unit_self_adjoint(s.domain, rng)
        res = density_surrogate(s.f, v, y)
        worst = max(worst, res["slope_dev"])
        for eps, g, pg in zip(DENSITY_EPS, res["gaps"], res["premise_gaps"]):
            rows.append({"sample": f"{i}:{eps:g}", "eps": eps, "gap": g, "premise_gap": pg,
                         "gap_over_eps": g / eps})
    rep.tables["density-surrogate"] = rows
    ids["continuity-surrogate"] = rep.add(Check(
        "surrogate:continuity", worst, tol.surrogate_slope,
        note="SURROGATE: max |log-log slope - 1| of the density gaps over eps in 1e-2, 1e-4, 1e-6"))

    rows, dev, jd_max = [], 0.0, 0.0
    for i, x, y in _pairs(s.samples, cfg.defect_pairs):
        x1, x2 = split_self_adjoint(x)
        for case, xc in (("x2=0", x1), ("x1=0", 1j * x2), ("both", x)):
            a, b = three_case_routes(s.f, xc, y)
            scale = 1.0 + xc.norm * y.norm
            rows.append({"sample": f"{i}:{case}", "case": case, "direct": a, "via_parts": b})
            dev = max(dev, abs(a - b) / scale)
            jd_max = max(jd_max, a)
    rep.tables["three-case"] = rows
    extra = [Check("consistency:three-case-routes", dev, 1e-10,
                   note="max |direct - via parts| / (1 + ||x|| ||y||)"),
             Check("conclusion:jordan-three-case", jd_max, tol.conclusion)]
    ok = all(rep.check(c)["passed"] for c in ids.values())
    _settle(rep, ids, _conclusion_checks(rep, s, ok, extra))
    rep.wall_clock = time.perf_counter() - start
    rep.finalize()
    return rep


# -- stability pipelines --------------------------------------------------------

def run_hyers(cfg: ExperimentConfig) -> StabilityReport:
    start = time.perf_counter()
    s = build(cfg)
    tol = cfg.tolerances
    f, samples = s.f, s.samples
    rep = StabilityReport(cfg.kind, cfg.to_dict())

    cf3 = _control(cfg, f, samples, "jensen")
    cf6 = _control(cfg, f, samples, "composite")
    L = lipschitz_L(cf6)
    rep.values.update(theta_jensen=cf3.params.theta, theta_composite=cf6.params.theta,
                      p=cfg.control_p, L=L, fp_bound_constant=fp_bound_constant(cf6))

    H = LimitMap(f, tol.hyers_rtol)
    limits = [H.estimate(x) for x in samples.base_points]
    result = HyersResult(limits)
    ids = []
    ids.append(rep.add(Check("hyers:converged", float(sum(not e.converged for e in limits)), 0.0,
                             note="number of base points without certified convergence")))
    rates = [e.rate for e in limits]
    rep.values["rate_max_rel_dev_from_L"] = max(abs(r / L - 1) for r in rates) if any(rates) else None
    ids.append(rep.add(Check("hyers:rate", max(rates), L + tol.rate,
                             note="max fitted increment ratio against L + slack")))

    jensen = verify_jensen_bound(f, H, samples, cf3, tol.bound, cfg.phi_mode, cfg.partial_N)
    fp = verify_fp_bound(f, H, samples, cf6, tol.bound)
    result.bound = fp
    rep.tables["hyers"] = result.rows()
    ids.append(rep.add(jensen))
    ids.append(rep.add(fp))

    series_dev = 0.0
    for x in samples.base_points[:4]:
        o = x * 0.0
        for args in ([x, -x, o], [-x, x * 3.0, o]):
            closed = phi_tilde(cf3, args)
            partial = phi_tilde(cf3, args, "partial", cfg.partial_N)
            if closed:
                series_dev = max(series_dev, abs(closed - partial) / closed)
    ids.append(rep.add(Check("control:series-closed-vs-partial", series_dev, 1e-10,
                             note=f"relative gap, partial sum to N={cfg.partial_N}")))

    planted = max(op_norm(H(x) - s.h0(x)) / max(1.0, x.norm) for x in samples.base_points)
    ids.append(rep.add(Check("recovered:equals-planted", planted, tol.recovered,
                             note="max ||h(x) - h0(x)|| / max(1,||x||)")))
    jd = sd = ad = hd = 0.0
    for i, x, y in _pairs(samples, cfg.defect_pairs):
        jd = max(jd, jordan_defect(H, x, y))
        sd = max(sd, star_defect(H, x))
        ad = max(ad, additivity_defect(H, x, y))
        hd = max(hd, homogeneity_defect(H, mu_choices(i)[0], x))
    for name, val in (("jordan", jd), ("star", sd), ("additivity", ad), ("homogeneity", hd)):
        ids.append(rep.add(Check(f"recovered:{name}", val, tol.recovered)))
    rep.verdict_from("stability", ids)
    rep.wall_clock = time.perf_counter() - start
    rep.finalize()
    return rep


def run_fixedpoint(cfg: ExperimentConfig) -> StabilityReport:
    start = time.perf_counter()
    s = build(cfg)
    tol = cfg.tolerances
    f, samples = s.f, s.samples
    rep = StabilityReport(cfg.kind, cfg.to_dict())
    cf6 = _control(cfg, f, samples, "composite")
    L = lipschitz_L(cf6)
    rep.values.update(theta_composite=cf6.params.theta, L=L, fp_bound_constant=fp_bound_constant(cf6))
    base = samples.base_points

    ids = []
    third, triple, rhs0, rhs1 = [], [], [], []
    for x in base:
        o = x * 0.0
        ph = phi(cf6, [x, o, o, o, o, o])
        third.append(op_norm(3 * f(x / 3) - f(x)))
        triple.append(op_norm(f(x * 3.0) / 3 - f(x)))
        rhs0.append(ph)
        rhs1.append(L * ph)
    ids.append(rep.add(SampleCheck("intermediate:third-scaling", third, rhs0, tol.bound)))
    ids.append(rep.add(SampleCheck("intermediate:triple-scaling", triple, rhs1, tol.bound)))

    H = LimitMap(f, tol.hyers_rtol)
    tweak = PerturbationSpec("radial", cfg.tweak_theta, cfg.control_p, seed=_seed_from(cfg, "tweak"))
    if cf6.params.theta > 0:
        g_alt = make_perturbed(f, tweak)
    else:
        # a zero control admits no second start beyond f itself; Jf is the only honest probe
        g_alt = apply_J(f)
    rep.values["second_start"] = g_alt.label
    audit = alternative_audit(f, samples, cf6, cfg.m_max, H, g_alt, atol=tol.zero_atol,
                              rtol=tol.hyers_rtol, agree_tol=tol.recovered)
    rep.tables["orbit"] = [r.to_record() | {"sample": str(r.m)} for r in audit.records]
    rep.values["d(f,Jf)"] = audit.records[0].distance
    alt_ids = [rep.add(c) for c in audit.checks]

    levels = range(min(cfg.witness_levels, samples.depth))
    wit_ids = [rep.add(Check(f"contraction:{name}", c.lhs, c.rhs, c.tol, note="d(Jg,Jh) <= L d(g,h)"))
               for name, c in (("f-vs-second-start", contraction_witness(f, g_alt, samples, cf6, levels, tol.zero_atol)),
                               ("f-vs-planted", contraction_witness(f, s.h0, samples, cf6, levels, tol.zero_atol)))]

    fp_eq = gen_metric(apply_J(H), H, base, cf6, tol.zero_atol)
    ids.append(rep.add(Check("fixed-point:equation", fp_eq, tol.recovered, note="d(Jh, h)")))
    ids.append(rep.add(verify_fp_bound(f, H, samples, cf6, tol.bound)))

    rep.verdict_from("fixed-point-alternative", alt_ids)
    rep.verdict_from("contraction", wit_ids)
    rep.verdict_from("stability", ids)
    rep.wall_clock = time.perf_counter() - start
    rep.finalize()
    return rep


def verify_algebra(cfg: ExperimentConfig) -> StabilityReport:
    """Randomized invariant suites for the algebra and structure layers."""
    start = time.perf_counter()
    rng = stream(cfg, "algebra")
    shape = AlgebraShape(tuple(cfg.domain))
    rep = StabilityReport(cfg.kind, cfg.to_dict())
    e = unit(shape)
    worst = dict.fromkeys(("involution", "anti-hom", "c-star", "eig-residual", "eig-orthonormal",
                           "homogeneity", "jordan-commutative", "sqrt-residual",
                           "decomposition-residual", "decomposition-unitary", "rr0-norm",
                           "rr0-distance", "rr0-invertible", "rr0-self-adjoint"), 0.0)
    for _ in range(cfg.count):
        x = random_element(shape, rng) * float(rng.uniform(0.1, 10.0) / 3)
        y = random_element(shape, rng)
        worst["involution"] = max(worst["involution"], 0.0 if adjoint(adjoint(x)) == x else 1.0)
        xy = x @ y
        worst["anti-hom"] = max(worst["anti-hom"],
                                op_norm(adjoint(xy) - adjoint(y) @ adjoint(x)) / max(1e-300, x.norm * y.norm))
        n = x.norm
        worst["c-star"] = max(worst["c-star"], abs((adjoint(x) @ x).norm - n * n) / (n * n))
        worst["homogeneity"] = max(worst["homogeneity"], abs(op_norm(x * 3.0) - 3 * n) / (3 * n))
        worst["jordan-commutative"] = max(worst["jordan-commutative"],
                                          0.0 if jordan_product(x, y) == jordan_product(y, x) else 1.0)
        a = random_self_adjoint(shape, rng) * 3.0
        dec = herm_eig(a)
        worst["eig-residual"] = max(worst["eig-residual"],
                                    op_norm(dec.reconstruct() - a) / max(1.0, a.norm))
        worst["eig-orthonormal"] = max(worst["eig-orthonormal"], max(
            float(np.abs(u.conj().T @ u - np.eye(len(u))).max()) for u in dec.eigenvectors))
        psd = adjoint(y) @ y
        r = sqrt_psd(psd)
        worst["sqrt-residual"] = max(worst["sqrt-residual"], op_norm(r @ r - psd) / max(1.0, psd.norm))
        dcmp = unitary_decompose(x)
        worst["decomposition-residual"] = max(worst["decomposition-residual"],
                                              op_norm(dcmp.reconstruct() - x) / max(1.0, n))
        worst["decomposition-unitary"] = max(worst["decomposition-unitary"], max(
            op_norm(adjoint(u) @ u - e) for _, u in dcmp.terms))
        v = _unit_self_adjoint(shape, rng)
        eps = float(rng.uniform(1e-3, 0.49))
        z = rr0_approximate(v, eps)
        worst["rr0-norm"] = max(worst["rr0-norm"], abs(z.norm - 1))
        worst["rr0-distance"] = max(worst["rr0-distance"], op_norm(z - v) / eps)
        worst["rr0-invertible"] = max(worst["rr0-invertible"],
                                      eps / 4 / max(1e-300, float(singular_values(z)[0])))
        worst["rr0-self-adjoint"] = max(worst["rr0-self-adjoint"], op_norm(z - adjoint(z)))
    limits = {"involution": 0.0, "anti-hom": 1e-12, "c-star": 1e-8, "eig-residual": 1e-10,
              "eig-orthonormal": 1e-10, "homogeneity": 1e-12, "jordan-commutative": 0.0,
              "sqrt-residual": 1e-10, "decomposition-residual": 1e-9,
              "decomposition-unitary": 1e-9, "rr0-norm": 1e-10, "rr0-distance": 1.0,
              "rr0-invertible": 1.0, "rr0-self-adjoint": 1e-12}
    notes = {"rr0-distance": "max ||z - v|| / eps", "rr0-invertible": "max (eps/4) / s_min(z)",
             "anti-hom": "relative to ||x|| ||y||", "c-star": "relative to ||x||^2"}
    ids = [rep.add(Check(f"algebra:{k}", worst[k], limits[k], note=notes.get(k, "")))
           for k in worst]
    rep.values["trials"] = cfg.count
    rep.verdict_from("algebra", ids)
    rep.wall_clock = time.perf_counter() - start
    rep.finalize()
    return rep


PIPELINES = {
    "audit-theorem21": run_audit_theorem21,
    "audit-theorem23": run_audit_theorem23,
    "run-hyers": run_hyers,
    "run-fixedpoint": run_fixedpoint,
    "verify-algebra": verify_algebra,
}


def run(cfg: ExperimentConfig) -> StabilityReport:
    cfg.validate()
    log.info("running %s with seed %s", cfg.kind, cfg.seed)
    return PIPELINES[cfg.kind](cfg)
