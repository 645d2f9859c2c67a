"""Command-line interface: decompose, gen-measure, constants, verify.

Exit codes: 0 all checks passed, 1 some check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import constants as ct
from . import geometry as geo
from . import kernels as kn
from . import measures as ms
from . import operators as op
from .harness import SUITES, Scenario, report_to_csv_rows, report_to_json, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _apply_thread_cap() -> None:
    cap = os.environ.get("CZBENCH_THREADS")
    if not cap:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(int(cap))
    except Exception:
        pass  # cap is best-effort; determinism never depends on it


def _cmd_decompose(args) -> int:
    dec = geo.decompose_rectangle(args.n, args.t, args.eps)
    geo.check_decomposition(dec)
    payload = {
        "n": dec.n,
        "m": dec.m,
        "t": str(dec.t),
        "t_star": str(dec.t_star),
        "B": dec.B,
        "count_bound": dec.count_bound,
        "paper_count_bound": dec.paper_count_bound,
        "slab": {"lo": str(dec.slab.lo), "hi": str(dec.slab.hi)},
        "slabs": [
            {"level": k, "prefix": p} for k, p in zip(dec.slab_levels, dec.slab_prefixes)
        ],
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"m={dec.m} t*={dec.t_star} B={dec.B} (bound {dec.count_bound})")
        for k, p in zip(dec.slab_levels, dec.slab_prefixes):
            print(f"  slab level {k}: start {Fraction(p, 2**k)}, {2**((dec.n - 1) * k)} cubes of side 1/{2**k}")
    return EXIT_OK


def _parse_params(spec: str) -> dict:
    out = {}
    if not spec:
        return out
    for item in spec.split(","):
        k, _, v = item.partition("=")
        if not _:
            raise ValueError(f"bad parameter {item!r}; use key=value")
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _cmd_gen_measure(args) -> int:
    params = _parse_params(args.params)
    if args.kind == "uniform":
        mu = ms.uniform_measure(args.n, args.L)
    elif args.kind == "power":
        mu = ms.power_weight_measure(float(params.get("exponent", 0.0)), args.L, n=args.n)
    elif args.kind == "cascade":
        mu = ms.generate_doubling_measure(args.n, args.L, float(params.get("a", 0.3)), args.seed)
    elif args.kind == "mixture":
        cell = params.get("atom_cell", [3 * 2**args.L // 4] * args.n)
        if isinstance(cell, int):
            cell = [cell] * args.n
        mu = ms.mixture_measure(args.n, args.L, atom_cell=tuple(cell),
                                atom_weight=float(params.get("atom_weight", 0.5)))
    else:
        raise ValueError(f"unknown measure kind {args.kind!r}")
    ms.write_measure(mu, args.out)
    print(f"wrote {args.kind} measure (n={mu.n}, L={mu.L}) to {args.out}")
    return EXIT_OK


def _cmd_constants(args) -> int:
    sigma = ms.read_measure(args.sigma, name="sigma")
    omega = ms.read_measure(args.omega, name="omega")
    if sigma.n != omega.n or sigma.L != omega.L:
        raise ValueError("sigma and omega must share a lattice")
    kernel = kn.make_kernel(args.kernel, sigma.n, args.alpha)
    spacing = 2.0**-sigma.L
    window = kn.TruncationWindow(delta=args.delta_cells * spacing, R=args.R)
    T = op.assemble(kernel, window, sigma, omega)
    family = geo.dyadic_family(sigma.n, min(args.depth, sigma.L))
    reports = [
        ct.muckenhoupt_A2(sigma, omega, args.alpha, family),
        ct.one_tailed_A2(sigma, omega, args.alpha, family),
        ct.one_tailed_A2(sigma, omega, args.alpha, family, starred=True),
        ct.kappa_testing(T, sigma, omega, args.kappa, family, full=False),
        ct.kappa_testing(T, sigma, omega, args.kappa, family, full=True),
        ct.bict(T, sigma, omega, family),
    ]
    norm = op.operator_norm(T, tol=1e-13)
    payload = {
        "kernel": {"name": args.kernel, "alpha": args.alpha},
        "window": {"delta": window.delta, "R": window.R, "shape": window.shape},
        "kappa": args.kappa,
        "norm": {"value": norm.value, "upper": norm.upper, "iterations": norm.iterations},
        "constants": [r.to_dict() for r in reports],
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote constants to {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def load_config(path: str) -> dict:
    raw = Path(path).read_bytes()
    if path.endswith(".json"):
        return json.loads(raw)
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(raw.decode())


def _cmd_verify(args) -> int:
    conf = load_config(args.config)
    scenarios = conf.get("scenarios")
    if scenarios is None:
        single = conf.get("scenario")
        if single is None:
            raise ValueError("config needs a [scenario] table or a [[scenarios]] list")
        scenarios = [single]
    suites = tuple(SUITES) if args.suite == "all" else (args.suite,)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    reports = []
    all_ok = True
    for i, raw in enumerate(scenarios):
        sc = Scenario.from_dict(raw)
        if sc.n != 1:
            suites_eff = tuple(s for s in suites if s != "factorial-chain")
        else:
            suites_eff = suites
        rep = run_scenario(sc, suites=suites_eff, timestamp=stamp)
        reports.append(rep)
        all_ok = all_ok and rep["all_passed"]
        status = "PASS" if rep["all_passed"] else "FAIL"
        print(f"[{status}] scenario {i} ({sc.label}): "
              f"{sum(v['passed'] for v in rep['verifications'])}/{len(rep['verifications'])} checks")
    bundle = {"reports": reports, "suites": list(suites)}
    if args.out:
        Path(args.out).write_text(report_to_json(bundle))
        print(f"wrote report to {args.out}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            for rep in reports:
                for row in report_to_csv_rows(rep):
                    writer.writerow(row)
        print(f"wrote csv to {args.csv}")
    return EXIT_OK if all_ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="czbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="dyadic decomposition of a unit-height rectangle slice")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--t", type=float, required=True)
    d.add_argument("--eps", type=float, required=True)
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=_cmd_decompose)

    g = sub.add_parser("gen-measure", help="generate a measure file")
    g.add_argument("--kind", choices=["uniform", "power", "cascade", "mixture"], required=True)
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--L", type=int, default=8)
    g.add_argument("--params", default="", help="comma-separated key=value pairs")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_measure)

    c = sub.add_parser("constants", help="constants table for a measure pair")
    c.add_argument("--sigma", required=True)
    c.add_argument("--omega", required=True)
    c.add_argument("--kernel", default="hilbert")
    c.add_argument("--alpha", type=float, default=0.0)
    c.add_argument("--kappa", type=int, default=2)
    c.add_argument("--depth", type=int, default=4)
    c.add_argument("--delta-cells", type=int, default=2)
    c.add_argument("--R", type=float, default=4.0)
    c.add_argument("--out", default="")
    c.set_defaults(func=_cmd_constants)

    v = sub.add_parser("verify", help="run verification suites from a config")
    v.add_argument("suite", choices=list(SUITES) + ["all"])
    v.add_argument("--config", required=True)
    v.add_argument("--out", default="")
    v.add_argument("--csv", default="")
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
