import csv
import json
from pathlib import Path

import pytest

from jordanstab import runner
from jordanstab.algebra import ConvergenceError
from jordanstab.checks import Check, SampleCheck
from jordanstab.cli import EXIT_CONFIG, EXIT_MISMATCH, EXIT_NUMERIC, EXIT_OK, main
from jordanstab.config import ConfigError, ExperimentConfig, parse_config
from jordanstab.report import StabilityReport, dumps
from jordanstab.runner import run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
[algebra]
domain = 2
[perturbation]
kind = radial
theta = 0.1
p = 0.5
[sampling]
count = 6
depth = 12
m_max = 8
premise_pairs = 3
premise_depth = 4
defect_pairs = 3
probes = 5
density_points = 2
seed = 7
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_full_config():
    cfg = parse_config((CONFIGS / "hyers_radial.ini").read_text())
    assert cfg.kind == "run-hyers"
    assert cfg.domain == (2, 3)
    assert cfg.transpose == (False, True)
    assert cfg.control_theta is None
    assert cfg.seed == 42 and cfg.expect == "PASS"
    cfg.validate()


@pytest.mark.parametrize("text, msg", [
    ("[bogus]\nx = 1\n", "unknown sections"),
    ("[sampling]\ncount = many\nseed = 1\n", "invalid literal"),
    ("[tolerances]\nfoo = 1\n[sampling]\nseed = 1\n", "unknown tolerance"),
    ("[mapping]\ntranspose = maybe\n[sampling]\nseed = 1\n", "not a boolean"),
    ("no section header", "no section"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_validation_errors():
    for cfg in (ExperimentConfig(kind="nope"), ExperimentConfig(seed=None),
                ExperimentConfig(p=1.0), ExperimentConfig(depth=61),
                ExperimentConfig(kind="run-fixedpoint", m_max=40, depth=40),
                ExperimentConfig(expect="MAYBE"), ExperimentConfig(phi_mode="approx")):
        with pytest.raises(ConfigError):
            cfg.validate()


def test_missing_seed_is_a_config_error(tmp_path, capsys):
    path = write(tmp_path, "[algebra]\ndomain = 2\n")
    assert main(["run-hyers", "--config", path]) == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_seed_flag_supplies_seed(tmp_path):
    path = write(tmp_path, SMALL.replace("seed = 7\n", ""))
    out = tmp_path / "r.json"
    assert main(["run-hyers", "--config", path, "--seed", "3", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["config"]["seed"] == 3


def test_bad_mapping_is_config_error(tmp_path):
    path = write(tmp_path, SMALL + "[mapping]\npermutation = 0, 0\n")
    assert main(["run-hyers", "--config", path]) == EXIT_CONFIG


def test_unreadable_config():
    assert main(["run-hyers", "--config", "/nonexistent/x.ini"]) == EXIT_CONFIG


def test_expect_mismatch_exit_code(tmp_path):
    path = write(tmp_path, SMALL)
    assert main(["run-hyers", "--config", path, "--expect", "fail", "--out",
                 str(tmp_path / "r.json")]) == EXIT_MISMATCH
    assert main(["run-hyers", "--config", path, "--expect", "pass", "--out",
                 str(tmp_path / "r.json")]) == EXIT_OK


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def diverge(cfg):
        raise ConvergenceError("Jacobi did not converge")

    monkeypatch.setitem(runner.PIPELINES, "run-hyers", diverge)
    assert main(["run-hyers", "--config", write(tmp_path, SMALL)]) == EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err


def test_report_is_deterministic(tmp_path):
    path = write(tmp_path, SMALL)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run-fixedpoint", "--config", path, "--out", str(a)]) == EXIT_OK
    assert main(["run-fixedpoint", "--config", path, "--out", str(b)]) == EXIT_OK
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("wall_clock_s"), db.pop("wall_clock_s")
    assert da == db
    assert a.with_suffix(".jsonl").read_bytes() == b.with_suffix(".jsonl").read_bytes()


def test_report_contents_and_csv(tmp_path):
    path = write(tmp_path, SMALL)
    out, table = tmp_path / "r.json", tmp_path / "t.csv"
    assert main(["run-hyers", "--config", path, "--out", str(out), "--csv", str(table)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "jordanstab.report/1"
    for c in doc["checks"]:
        assert {"lhs", "rhs", "margin", "passed", "id"} <= set(c)
    ids = [c["id"] for c in doc["checks"]]
    assert ids == [f"C{i:03d}" for i in range(1, len(ids) + 1)]
    lines = out.with_suffix(".jsonl").read_text().splitlines()
    kinds = {json.loads(l)["kind"] for l in lines}
    assert kinds == {"check", "row", "verdict"}
    with open(table) as fh:
        rows = list(csv.DictReader(fh))
    assert rows and "margin" in rows[0]


def test_stdout_summary(capsys, tmp_path):
    path = write(tmp_path, SMALL)
    assert main(["audit-theorem21", "--config", path]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] == "NOT-APPLICABLE"
    assert doc["values"]["broken_hypotheses"] == ["orbit-jordan-identity"]


def test_dumps_formatting():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(float("inf")) == "Infinity"
    assert dumps({"b": 1, "a": [True, None, 1j]}) == '{"a":[true,null,[0,1]],"b":1}'
    assert json.loads(dumps({"x": float("-inf")}))["x"] == float("-inf")
    with pytest.raises(TypeError):
        dumps(object())


def test_report_verdict_logic():
    rep = StabilityReport("t", {})
    ok = rep.add(Check("a", 1.0, 2.0))
    bad = rep.add(SampleCheck("b", [1.0, 3.0], [2.0, 2.0], tol=0.0))
    assert rep.check(bad)["lhs"] == 3.0 and len(rep.tables["b"]) == 2
    rep.verdict_from("x", [ok])
    assert rep.finalize() == "PASS"
    rep.set_verdict("y", "NOT-APPLICABLE", [])
    assert rep.finalize() == "NOT-APPLICABLE"
    rep.verdict_from("z", [ok, bad])
    assert rep.finalize() == "FAIL"


def test_check_margins_with_infinities():
    assert Check("c", 1.0, float("inf")).passed
    assert not Check("c", float("inf"), 1.0).passed
    assert Check("c", float("inf"), float("inf")).margin == 0.0
    assert Check("c", 1.0 + 1e-10, 1.0, tol=1e-9).passed


def test_example_configs_hit_their_expectations():
    for name in ("audit21_perturbed.ini", "audit23_jump.ini"):
        cfg = parse_config((CONFIGS / name).read_text())
        cfg.count, cfg.premise_pairs, cfg.defect_pairs, cfg.probes = 12, 4, 4, 10
        assert run(cfg).verdict == cfg.expect
