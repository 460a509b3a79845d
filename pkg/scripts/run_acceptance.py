#!/usr/bin/env python3
"""
Seeded acceptance driver

Generates instances for a range of seeds, runs ``msalg check`` on each and
prints one line per seed. Constant-support instances must pass every check;
support-violating ones must fail the retraction with a vote failure.
"""
import argparse
import contextlib
import io
import json
import sys
import tempfile
import time
from pathlib import Path

from msalg.cli import main as msalg_main
from msalg.generator import generate_text
from msalg.logging_config import get_logger, setup_logging
from msalg.models import GeneratorConfig

logger = get_logger("run_acceptance")


def run_check(path: Path, *names: str) -> dict:
    argv = ["check", str(path), "--json"]
    for name in names:
        argv += ["--check", name]
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        msalg_main(argv)
    return json.loads(out.getvalue())


def expect_pass(report: dict) -> bool:
    return report["status"] == "passed"


def expect_vote_failure(report: dict) -> bool:
    retraction = [v for v in report["verdicts"] if v["name"] == "retraction"]
    return bool(retraction) and all(v["witness"].get("code") == "VOTE_FAILURE" for v in retraction)


def main() -> int:
    parser = argparse.ArgumentParser(description="Run msalg checks on seeded generated instances")
    parser.add_argument("--seeds", type=int, default=50, help="number of seeds per suite")
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--sorts", type=int, default=2)
    parser.add_argument("--carrier-size", type=int, default=2)
    parser.add_argument("--index-size", type=int, default=3)
    args = parser.parse_args()
    setup_logging("ERROR")

    suites = [
        ("constant-support", {"force_constant_support": True}, (), expect_pass),
        ("surjective", {"force_surjective_transitions": True}, ("retraction",), expect_pass),
        ("violation", {"inject_support_violation": True}, ("retraction",), expect_vote_failure),
    ]
    failures = 0
    start_time = time.time()
    with tempfile.TemporaryDirectory() as tmp:
        for suite, flags, names, expectation in suites:
            for seed in range(args.first_seed, args.first_seed + args.seeds):
                config = GeneratorConfig(seed=seed, sorts=args.sorts, carrier_size=args.carrier_size,
                                         index_size=args.index_size, **flags)
                path = Path(tmp) / f"{suite}-{seed}.msa"
                path.write_text(generate_text(config), encoding="utf-8")
                report = run_check(path, *names)
                ok = expectation(report)
                failures += not ok
                print(f"{'ok' if ok else 'FAIL':4} {suite:16} seed={seed} verdicts={len(report['verdicts'])}")
                if not ok:
                    logger.error("unexpected outcome", extra={"subject": f"{suite}/{seed}"})

    print(f"{failures} failures in {time.time() - start_time:.2f}s")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
