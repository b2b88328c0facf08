"""``stab``: command-line entry point.

Exit codes: 0 verdict as expected, 1 verdict mismatch, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .checks import FAIL, NOT_APPLICABLE, PASS
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .report import dumps
from .runner import run

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI experiment file (defaults apply when omitted)")
        sp.add_argument("--seed", type=int, help="overrides [sampling] seed")
        sp.add_argument("--out", help="summary JSON path; records go next to it as .jsonl")
        sp.add_argument("--expect", choices=("pass", "fail", "not-applicable"),
                        help="expected overall verdict")
        sp.add_argument("--csv", help="write the defect and margin tables as CSV")
    return ap


def expected_ok(verdict: str, expect: str | None) -> bool:
    if expect is None:
        return verdict in (PASS, NOT_APPLICABLE)
    return verdict == expect


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command) if args.config else ExperimentConfig(kind=args.command)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.expect is not None:
            cfg.expect = args.expect.upper()
        cfg.validate()
    except ConfigError as exc:
        print(f"stab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(over="raise", invalid="raise"):
            rep = run(cfg)
    except ConfigError as exc:
        print(f"stab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"stab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        rep.write(args.out)
    if args.csv:
        rep.write_csv(args.csv)
    if args.out:
        counts = {v: sum(c["passed"] == (v == PASS) for c in rep.checks) for v in (PASS, FAIL)}
        print(dumps({"pipeline": rep.pipeline, "verdict": rep.verdict,
                     "checks_passed": counts[PASS], "checks_failed": counts[FAIL], "out": args.out}))
    else:
        sys.stdout.write(rep.to_json())
    return EXIT_OK if expected_ok(rep.verdict, cfg.expect) else EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
