"""Acceptance criteria: one test per criterion, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  The batteries are deterministic; heavy ones share
module-scoped fixtures so the polynomial-testing scenarios are built once.
"""

import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from czbench import cli
from czbench import constants as ct
from czbench import geometry as geo
from czbench import harness as hn
from czbench import kernels as kn
from czbench import measures as ms
from czbench import operators as op

REPO = Path(__file__).resolve().parent.parent


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


# -- criterion 1: decomposition exactness -------------------------------------


def test_criterion_1_decomposition_exactness():
    t0 = time.time()
    rng = np.random.default_rng(20260809)
    checked = dyadic_hits = 0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        eps = float(rng.choice([0.3, 0.1, 0.01]))
        t = float(rng.uniform(0.0, 1.0))
        if not (0.0 < t < 1.0):
            continue
        dec = geo.decompose_rectangle(n, t, eps)
        geo.check_decomposition(dec)  # disjointness + exact integer coverage
        if dec.t_star == dec.t:
            dyadic_hits += 1
        else:
            assert abs(dec.t - dec.t_star) < Fraction(eps)
        if n >= 2:
            assert dec.B <= 2 * 2 ** ((n - 1) * dec.m)
        else:
            # the 2*2**((n-1)m) closed form degenerates to 2 in one
            # dimension, where the binary expansion genuinely needs up to m
            # intervals; the exact construction bound is asserted instead
            # (see the companion xfail below for the literal formula)
            assert dec.B <= dec.m
        checked += 1
    elapsed = time.time() - t0
    verdict(1, checked == 1000 and elapsed < 10.0,
            f"{checked} decompositions exact, {dyadic_hits} dyadic-exact, {elapsed:.1f}s")


@pytest.mark.xfail(
    strict=True,
    reason="the closed-form cube-count bound 2*2**((n-1)m) cannot hold in one "
    "dimension: covering [0, t*) needs one interval per binary digit of t*, "
    "up to m of them (e.g. t=0.99, eps=0.01 gives six digits)",
)
def test_criterion_1_count_bound_literal_formula_one_dimensional():
    dec = geo.decompose_rectangle(1, 0.99, 0.01)
    assert dec.B <= 2 * 2 ** ((1 - 1) * dec.m)


# -- criterion 2: monomial identity quadrature ---------------------------------


def test_criterion_2_monomial_identity_quadrature():
    t0 = time.time()
    Q = geo.DyadicCube(level=0, corner=(0,), root=geo.unit_root(1))
    worst = 0.0
    for d in (1, 2, 3):
        errs = {}
        for M in (2**8, 2**9, 2**10):
            err = geo.monomial_recovery_error(Q, (d,), M)
            assert err <= 4 * d / M
            errs[M] = err
        # doubling the node count at least halves the error, 10% headroom
        assert errs[2**9] <= 0.55 * errs[2**8]
        assert errs[2**10] <= 0.55 * errs[2**9]
        worst = max(worst, errs[2**8] * 2**8 / (4 * d))
    elapsed = time.time() - t0
    verdict(2, elapsed < 5.0, f"errors within 4d/M (worst fill {worst:.2f}), halving holds, {elapsed:.1f}s")


# -- criterion 3: Muckenhoupt and Poisson normalizations -----------------------


def test_criterion_3_lebesgue_normalizations():
    t0 = time.time()
    worst = 0.0
    for n, L in ((1, 8), (2, 8)):
        mu = ms.uniform_measure(n, L)
        rep = ct.muckenhoupt_A2(mu, mu, 0.0, geo.dyadic_family(n, 8))
        worst = max(worst, abs(rep.value - 1.0))
    assert worst <= 1e-12
    leb = ms.uniform_measure(1, 10)
    Q = geo.DyadicCube(level=0, corner=(0,), root=geo.unit_root(1))
    poisson = ct.poisson_integral(Q, leb, 0.0, lebesgue_tail=True)
    assert abs(poisson - 2.0) <= 1e-3
    elapsed = time.time() - t0
    verdict(3, elapsed < 5.0,
            f"A2 deviation {worst:.2e} <= 1e-12, Poisson {poisson:.6f} within 1e-3 of 2, {elapsed:.1f}s")


# -- criterion 4: boundary-shell lemma ------------------------------------------


def test_criterion_4_boundary_lemma_exact():
    t0 = time.time()
    checked = 0
    amps = [0.3, 0.25, 0.2, 0.15, 0.1]
    for i in range(20):
        n = 1 if i < 10 else 2
        a = amps[i % len(amps)]
        mu = ms.generate_doubling_measure(n, 8, a, seed=1000 + i)
        fam_all = [c for c in geo.dyadic_family(n, 8) if c.level >= 1]
        prof = ms.doubling_profile(mu, fam_all)
        assert not prof.infinite
        for Q in geo.dyadic_family(n, 5):
            for m in range(2, min(5, 8 - Q.level) + 1):
                ratio, _ = ms.boundary_mass_check(mu, Q, m, compute_bound=False)
                assert ratio * (m - 1) <= prof.C_triple  # both sides exact rationals
                checked += 1
    elapsed = time.time() - t0
    verdict(4, elapsed < 60.0, f"{checked} exact shell checks over 20 cascades, {elapsed:.1f}s")


# -- criteria 5 and 7 (1d part): factorial chain + sanity chains ----------------


def _chain_scenario(seed: int) -> hn.Scenario:
    amps = [0.3, 0.2, 0.1]
    return hn.Scenario(
        n=1,
        L=10,
        sigma={"kind": "cascade", "a": amps[seed % 3]},
        omega={"kind": "cascade", "a": amps[(seed + 1) % 3], "seed_offset": 104729},
        kernel={"name": "hilbert", "alpha": 0.0},
        window={"delta_cells": 2, "R": 4.0, "shape": "sharp"},
        family_depth=10,
        kappa=3,
        eps=(0.5,),
        seed=seed,
        label=f"chain-{seed}",
    )


@pytest.fixture(scope="module")
def factorial_chain_batch():
    results = []
    t0 = time.time()
    for seed in range(50):
        sc = _chain_scenario(seed)
        inst10 = hn.ScenarioInstance(sc, L=10)
        reps10 = hn.verify_factorial_chain_1d(sc, d_max=3, inst=inst10)
        chain10 = hn.sanity_chain(sc, inst=inst10)
        del inst10
        inst11 = hn.ScenarioInstance(sc, L=11)
        reps11 = hn.verify_factorial_chain_1d(sc, d_max=3, L=11, inst=inst11)
        chain11 = hn.sanity_chain(sc, inst=inst11)
        del inst11
        results.append({"reps10": reps10, "reps11": reps11, "chains": [chain10, chain11]})
    return {"results": results, "elapsed": time.time() - t0}


def _excess(reps) -> float:
    worst = 0.0
    for r in reps:
        d = int(r.breakdown["factorial"])
        base = r.breakdown["base"]
        if base > 0:
            worst = max(worst, r.lhs / (r.breakdown["factorial"] * base) - 1.0)
    return max(worst, 0.0)


def test_criterion_5_factorial_chain(factorial_chain_batch):
    results = factorial_chain_batch["results"]
    elapsed = factorial_chain_batch["elapsed"]
    assert len(results) == 50
    excess10 = excess11 = 0.0
    for item in results:
        for r in item["reps10"]:
            assert r.passed  # FT[d] <= d! FT[0] * 1.10
        for r in item["reps11"]:
            assert r.passed
        excess10 = max(excess10, _excess(item["reps10"]))
        excess11 = max(excess11, _excess(item["reps11"]))
    assert excess11 <= excess10 + 1e-12  # tolerance excess shrinks with the grid
    verdict(5, elapsed < 600.0,
            f"50 pairs pass at 2^10 and 2^11; excess {excess10:.3g} -> {excess11:.3g}, {elapsed:.0f}s")


# -- criteria 6 and 7 (2d part): polynomial-testing control ---------------------


def _tp_scenario(i: int) -> hn.Scenario:
    kernels = [
        {"name": "riesz", "alpha": 0.0},
        {"name": "riesz", "alpha": 0.5},
        {"name": "frac-int", "alpha": 0.5},
        {"name": "frac-int", "alpha": 1.0},
    ]
    measures = [
        ({"kind": "cascade", "a": 0.3}, {"kind": "cascade", "a": 0.2, "seed_offset": 313}),
        ({"kind": "cascade", "a": 0.2}, {"kind": "uniform"}),
        ({"kind": "uniform"}, {"kind": "cascade", "a": 0.3, "seed_offset": 77}),
        ({"kind": "mixture", "atom_weight": 0.5}, {"kind": "cascade", "a": 0.25, "seed_offset": 9}),
    ]
    sig, om = measures[i % 4]
    return hn.Scenario(
        n=2,
        L=6,
        sigma=dict(sig),
        omega=dict(om),
        kernel=dict(kernels[i % len(kernels)]),
        window={"delta_cells": 2, "R": 4.0, "shape": "sharp"},
        family_depth=4,
        kappa=1 + i % 3,
        eps=(0.5 if i % 2 == 0 else 0.1,),
        seed=i,
        label=f"tp-{i}",
    )


@pytest.fixture(scope="module")
def tp_control_batch():
    out = []
    t0 = time.time()
    for i in range(30):
        sc = _tp_scenario(i)
        inst = hn.ScenarioInstance(sc)
        rep = hn.verify_tp_control(sc, inst=inst)
        chain = hn.sanity_chain(sc, inst=inst)
        out.append({"scenario": sc, "tp": rep, "chain": chain})
        del inst
    return {"results": out, "elapsed": time.time() - t0}


def test_criterion_6_tp_control(tp_control_batch):
    results = tp_control_batch["results"]
    elapsed = tp_control_batch["elapsed"]
    assert len(results) == 30
    worst_slack = math.inf
    for item in results:
        rep = item["tp"]
        assert rep.passed, (item["scenario"].label, rep.breakdown)
        worst_slack = min(worst_slack, rep.breakdown["slack"])
    verdict(6, elapsed < 1200.0,
            f"30/30 scenarios pass; min slack {worst_slack:.3g}, {elapsed:.0f}s")


def test_criterion_7_sanity_chain_everywhere(factorial_chain_batch, tp_control_batch):
    count = 0
    for item in factorial_chain_batch["results"]:
        for chain in item["chains"]:
            assert chain.passed, chain.breakdown
            count += 1
    for item in tp_control_batch["results"]:
        assert item["chain"].passed, item["chain"].breakdown
        count += 1
    verdict(7, True, f"testing chains and bilinear bounds hold on {count} instances at 8 ulp")


# -- criterion 8: norm-to-testing stability and the classical norm --------------


def test_criterion_8_t1_stability_and_pi():
    t0 = time.time()
    rels = []
    for a, b in ((0.3, -0.3), (0.5, -0.2), (0.0, 0.0)):
        sc = hn.Scenario(
            n=1,
            L=9,
            sigma={"kind": "power", "exponent": a},
            omega={"kind": "power", "exponent": b},
            kernel={"name": "hilbert", "alpha": 0.0},
            window={"delta_cells": 2, "R": 4.0, "shape": "sharp"},
            family_depth=6,
            kappa=2,
            seed=1,
            label=f"pw({a},{b})",
        )
        rep = hn.verify_t1_equivalence(sc)
        assert rep.applicable and rep.passed
        assert math.isfinite(rep.breakdown["coarse"]["rho_fwd"])
        assert rep.lhs <= 0.25  # relative change from L=9 to L=10
        rels.append(rep.lhs)
    mu = ms.uniform_measure(1, 12)
    W = kn.TruncationWindow(delta=2 * 2.0**-12, R=4.0)
    T = op.assemble(kn.hilbert_kernel(), W, mu, mu, memory_budget=2**31)
    norm = op.operator_norm(T, tol=1e-11).value
    rel_pi = abs(norm - math.pi) / math.pi
    assert rel_pi <= 0.05
    elapsed = time.time() - t0
    verdict(8, elapsed < 600.0,
            f"ratio drift {max(rels):.3f} <= 0.25; norm {norm:.4f} vs pi rel {rel_pi:.3%}, {elapsed:.0f}s")


# -- criterion 9: cancellation forward bound and the bilinear oracle -------------


def test_criterion_9_cancellation_and_bict_oracle():
    t0 = time.time()
    worst_fwd = 0.0
    pairs = [
        ({"kind": "uniform"}, {"kind": "uniform"}),
        ({"kind": "power", "exponent": 0.3}, {"kind": "power", "exponent": -0.3}),
        ({"kind": "cascade", "a": 0.3}, {"kind": "cascade", "a": 0.2, "seed_offset": 77}),
    ]
    for sig_spec, om_spec in pairs:
        for kname, alpha in (("hilbert", 0.0), ("frac-int", 0.5)):
            for seed in (0, 1):
                sc = hn.Scenario(
                    n=1, L=7, sigma=dict(sig_spec), omega=dict(om_spec),
                    kernel={"name": kname, "alpha": alpha},
                    window={"delta_cells": 2, "R": 4.0, "shape": "sharp"},
                    family_depth=5, kappa=2, seed=seed, label="canc",
                )
                rep = hn.verify_cancellation(sc)
                assert rep.passed, rep.breakdown
                worst_fwd = max(worst_fwd, rep.lhs / rep.rhs)
    agree_signed = 1.0
    for seed in range(25):
        L = 3
        sig = ms.generate_doubling_measure(1, L, 0.3, seed)
        om = ms.generate_doubling_measure(1, L, 0.3, seed + 500)
        W = kn.TruncationWindow(delta=2.0**-L, R=4.0)
        for kname, alpha in (("hilbert", 0.0), ("frac-int", 0.5)):
            K = kn.make_kernel(kname, 1, alpha)
            T = op.assemble(K, W, sig, om)
            for Q in geo.dyadic_family(1, 1):
                alt = ct.bict(T, sig, om, [Q]).value
                exact = ct.bict_exhaustive(T, sig, om, Q, max_cells=12)
                assert alt <= exact * (1 + 1e-12)
                if kname == "frac-int":
                    assert alt >= exact * (1 - 1e-12)  # nonnegative: reaches optimum
                elif exact > 0:
                    agree_signed = min(agree_signed, alt / exact)
    assert agree_signed >= 0.95
    elapsed = time.time() - t0
    verdict(9, elapsed < 300.0,
            f"forward ratio <= {worst_fwd:.3f} of bound; signed agreement {agree_signed:.3f}, {elapsed:.0f}s")


# -- criterion 10: determinism ----------------------------------------------------


def test_criterion_10_determinism(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"report{i}.json"
        code = cli.main(["verify", "all", "--config", str(REPO / "configs" / "demo.toml"),
                         "--out", str(out)])
        assert code == 0
        bundle = json.loads(out.read_text())
        for rep in bundle["reports"]:
            rep["generated_at"] = ""
        outs.append(json.dumps(bundle, sort_keys=True, indent=2))
    assert outs[0] == outs[1]  # byte-identical after timestamp strip
    golden = json.loads((REPO / "tests" / "data" / "golden_demo.json").read_text())
    current = json.loads(outs[0])
    assert current["reports"] == golden["reports"]
    verdict(10, True, "verify-all replays byte-identically and matches the golden report")
