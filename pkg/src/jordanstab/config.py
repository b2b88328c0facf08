"""Experiment configuration: an INI file with fixed sections.

Example::

    [algebra]
    domain = 2, 3

    [mapping]
    transpose = false, true
    permutation = 0, 1

    [perturbation]
    kind = radial
    theta = 0.1
    p = 0.5

    [control]
    theta = fit

    [sampling]
    count = 64
    depth = 40
    seed = 42

    [expect]
    verdict = PASS
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

EXPERIMENTS = ("audit-theorem21", "audit-theorem23", "run-hyers", "run-fixedpoint",
               "verify-algebra")
SECTIONS = ("experiment", "algebra", "mapping", "perturbation", "control", "sampling",
            "tolerances", "expect")
VERDICTS = ("PASS", "FAIL", "NOT-APPLICABLE")


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    tau_sa: float = 1e-10
    tau_eig: float = 1e-10
    tau_psd: float = 1e-10
    premise: float = 1e-9
    conclusion: float = 1e-9
    bound: float = 1e-9
    unitality: float = 1e-9
    hyers_rtol: float = 1e-12
    zero_atol: float = 1e-13
    recovered: float = 1e-8
    rate: float = 0.05
    surrogate_slope: float = 0.1
    rr0_eps: float = 1e-2


@dataclass
class ExperimentConfig:
    kind: str = "run-hyers"
    domain: tuple[int, ...] = (2, 3)
    permutation: tuple[int, ...] | None = None
    transpose: tuple[bool, ...] | None = None
    conjugate: bool = True
    scale: float = 1.0
    mapping_seed: int | None = None
    perturbation: str = "radial"
    pert_theta: float = 0.1
    pert_p: float = 0.5
    pert_seed: int | None = None
    control_theta: float | None = None  # None: fit from measurements
    p: float | None = None
    phi_mode: str = "closed"
    partial_N: int = 200
    count: int = 64
    depth: int = 40
    seed: int | None = 42
    premise_depth: int = 20
    premise_pairs: int = 16
    defect_pairs: int = 16
    probes: int = 50
    m_max: int = 20
    witness_levels: int = 3
    density_points: int = 8
    tweak_theta: float = 0.05
    tolerances: Tolerances = field(default_factory=Tolerances)
    expect: str | None = None

    @property
    def control_p(self) -> float:
        return self.p if self.p is not None else self.pert_p

    def validate(self):
        if self.kind not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.seed is None:
            raise ConfigError("a seed is required ([sampling] seed or --seed)")
        if not self.domain or any(d < 1 for d in self.domain):
            raise ConfigError(f"bad block dimensions {self.domain}")
        if not 0 < self.control_p < 1:
            raise ConfigError(f"control exponent p must lie in (0, 1), got {self.control_p}")
        if self.control_theta is not None and not self.control_theta >= 0:
            raise ConfigError("control theta must be >= 0 or 'fit'")
        if self.phi_mode not in ("closed", "partial"):
            raise ConfigError(f"phi_mode must be closed or partial, got {self.phi_mode!r}")
        if not 1 <= self.count:
            raise ConfigError("sample count must be positive")
        if not 0 <= self.depth <= 60:
            raise ConfigError("orbit depth must lie in [0, 60]")
        if self.premise_depth > 60:
            raise ConfigError("premise depth must be <= 60")
        if self.kind == "run-fixedpoint" and self.m_max + 1 > self.depth:
            raise ConfigError(f"m_max={self.m_max} needs orbit depth >= {self.m_max + 1}")
        for name, value in asdict(self.tolerances).items():
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"tolerance {name} must be positive")
        if self.expect is not None and self.expect not in VERDICTS:
            raise ConfigError(f"expected verdict must be one of {VERDICTS}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain"] = list(self.domain)
        for k in ("permutation", "transpose"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace("[", "").replace("]", "").split(",") if t.strip())


def _bools(text: str) -> tuple[bool, ...]:
    out = []
    for t in text.replace("[", "").replace("]", "").split(","):
        t = t.strip().lower()
        if not t:
            continue
        if t not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"not a boolean: {t!r}")
        out.append(t in ("true", "1", "yes"))
    return tuple(out)


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    cfg = ExperimentConfig()
    tol = cfg.tolerances
    try:
        if cp.has_section("experiment"):
            cfg.kind = cp["experiment"].get("kind", cfg.kind)
        if cp.has_section("algebra"):
            sec = cp["algebra"]
            cfg.domain = _ints(sec.get("domain", "2, 3"))
        if cp.has_section("mapping"):
            sec = cp["mapping"]
            if "permutation" in sec:
                cfg.permutation = _ints(sec["permutation"])
            if "transpose" in sec:
                cfg.transpose = _bools(sec["transpose"])
            cfg.conjugate = sec.getboolean("conjugate", cfg.conjugate)
            cfg.scale = sec.getfloat("scale", cfg.scale)
            if "seed" in sec:
                cfg.mapping_seed = sec.getint("seed")
        if cp.has_section("perturbation"):
            sec = cp["perturbation"]
            cfg.perturbation = sec.get("kind", cfg.perturbation)
            cfg.pert_theta = sec.getfloat("theta", cfg.pert_theta)
            cfg.pert_p = sec.getfloat("p", cfg.pert_p)
            if "seed" in sec:
                cfg.pert_seed = sec.getint("seed")
        if cp.has_section("control"):
            sec = cp["control"]
            theta = sec.get("theta", "fit").strip().lower()
            cfg.control_theta = None if theta == "fit" else float(theta)
            if "p" in sec:
                cfg.p = sec.getfloat("p")
            cfg.phi_mode = sec.get("phi_mode", cfg.phi_mode)
            cfg.partial_N = sec.getint("partial_N", cfg.partial_N)
        if cp.has_section("sampling"):
            sec = cp["sampling"]
            for name in ("count", "depth", "premise_depth", "premise_pairs", "defect_pairs",
                         "probes", "m_max", "witness_levels", "density_points"):
                setattr(cfg, name, sec.getint(name, getattr(cfg, name)))
            cfg.tweak_theta = sec.getfloat("tweak_theta", cfg.tweak_theta)
            cfg.seed = sec.getint("seed") if "seed" in sec else None
        else:
            cfg.seed = None
        if cp.has_section("tolerances"):
            for name, value in cp["tolerances"].items():
                if not hasattr(tol, name):
                    raise ConfigError(f"unknown tolerance {name!r}")
                setattr(tol, name, float(value))
        if cp.has_section("expect"):
            v = cp["expect"].get("verdict")
            cfg.expect = v.strip().upper() if v else None
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if kind is not None:
        cfg.kind = kind
    return cfg


def load_config(path: str | Path, kind: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, kind)
