"""Stability reports: numbered checks, verdicts, tables, and their serialization.

Floats are written with 17 significant digits so a report replays exactly;
non-finite values use the ``Infinity``/``NaN`` tokens that :mod:`json`
reads back.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .checks import FAIL, NOT_APPLICABLE, PASS, Check, SampleCheck

SCHEMA = "jordanstab.report/1"


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj: Any) -> str:
    """Compact JSON with fixed float formatting and sorted keys."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}"
                              for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class StabilityReport:
    pipeline: str
    config: dict
    checks: list[dict] = field(default_factory=list)
    verdicts: dict[str, dict] = field(default_factory=dict)
    tables: dict[str, list[dict]] = field(default_factory=dict)
    values: dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0
    verdict: str = PASS

    def add(self, check: Check | SampleCheck, pipeline_step: str = "") -> str:
        """Register a check and return its id (``C001``, ``C002``, ...)."""
        cid = f"C{len(self.checks) + 1:03d}"
        if isinstance(check, SampleCheck):
            rec = check.summary().to_record()
            self.tables.setdefault(check.name, []).extend(check.rows())
        else:
            rec = check.to_record()
        rec["id"] = cid
        if pipeline_step:
            rec["step"] = pipeline_step
        self.checks.append(rec)
        return cid

    def check(self, cid: str) -> dict:
        return self.checks[int(cid[1:]) - 1]

    def set_verdict(self, name: str, verdict: str, check_ids: Iterable[str], note: str = ""):
        self.verdicts[name] = {"verdict": verdict, "checks": list(check_ids)}
        if note:
            self.verdicts[name]["note"] = note

    def passed(self, ids: Iterable[str]) -> bool:
        return all(self.check(c)["passed"] for c in ids)

    def verdict_from(self, name: str, ids: list[str], note: str = "") -> str:
        v = PASS if self.passed(ids) else FAIL
        self.set_verdict(name, v, ids, note)
        return v

    def finalize(self) -> str:
        states = [v["verdict"] for v in self.verdicts.values()]
        if FAIL in states:
            self.verdict = FAIL
        elif NOT_APPLICABLE in states:
            self.verdict = NOT_APPLICABLE
        else:
            self.verdict = PASS
        return self.verdict

    def summary(self, include_clock: bool = True) -> dict:
        doc = {"schema": SCHEMA, "pipeline": self.pipeline, "config": self.config,
               "verdict": self.verdict, "verdicts": self.verdicts, "checks": self.checks,
               "values": self.values}
        if include_clock:
            doc["wall_clock_s"] = self.wall_clock
        return doc

    def records(self) -> list[dict]:
        out = [{"kind": "check", **c} for c in self.checks]
        for name in sorted(self.tables):
            out.extend({"kind": "row", "table": name, **row} for row in self.tables[name])
        out.extend({"kind": "verdict", "name": k, **v} for k, v in sorted(self.verdicts.items()))
        return out

    def to_json(self, include_clock: bool = True) -> str:
        return dumps(self.summary(include_clock)) + "\n"

    def to_jsonl(self) -> str:
        return "".join(dumps(r) + "\n" for r in self.records())

    def write(self, path: str | Path):
        path = Path(path)
        path.write_text(self.to_json())
        path.with_suffix(".jsonl").write_text(self.to_jsonl())

    def write_csv(self, path: str | Path):
        rows = [{"table": name, **row} for name in sorted(self.tables) for row in self.tables[name]]
        keys = ["table"] + sorted({k for r in rows for k in r} - {"table"})
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in rows:
                w.writerow({k: (_fmt_float(v) if isinstance(v, float) else v)
                            for k, v in r.items()})
