#!/usr/bin/env python3
"""Run the demo battery and print a compact constants/verdict summary.

Run from the repository root:  python3 scripts/run_demo.py
"""

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from czbench.cli import load_config  # noqa: E402
from czbench.harness import SUITES, Scenario, run_scenario  # noqa: E402


def main() -> None:
    conf = load_config(str(REPO / "configs" / "demo.toml"))
    for raw in conf["scenarios"]:
        sc = Scenario.from_dict(raw)
        suites = tuple(s for s in SUITES if not (s == "factorial-chain" and sc.n != 1))
        rep = run_scenario(sc, suites=suites)
        print(f"== {sc.label} (n={sc.n}, L={sc.L}, kernel={sc.kernel['name']})")
        for c in rep["constants"]:
            print(f"   {c['constant_name']:>6} = {c['value']:.6g}")
        for v in rep["verifications"]:
            mark = "PASS" if v["passed"] else ("n/a " if not v["applicable"] else "FAIL")
            print(f"   [{mark}] {v['inequality']}")
    print("done")


if __name__ == "__main__":
    main()
