#!/usr/bin/env python3
"""Regenerate the checked-in golden report for the demo configuration.

Run from the repository root:  python3 scripts/make_golden.py
"""

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from czbench.cli import load_config  # noqa: E402
from czbench.harness import SUITES, Scenario, report_to_json, run_scenario  # noqa: E402


def main() -> None:
    conf = load_config(str(REPO / "configs" / "demo.toml"))
    reports = []
    for raw in conf["scenarios"]:
        sc = Scenario.from_dict(raw)
        suites = tuple(s for s in SUITES if not (s == "factorial-chain" and sc.n != 1))
        reports.append(run_scenario(sc, suites=suites, timestamp=""))
    bundle = {"reports": reports, "suites": list(SUITES)}
    out = REPO / "tests" / "data" / "golden_demo.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report_to_json(bundle))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
