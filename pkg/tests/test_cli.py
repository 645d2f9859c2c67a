"""CLI: subcommands, exit codes, config handling."""

import json
from pathlib import Path

import numpy as np
import pytest

from czbench import cli
from czbench import measures as ms

REPO = Path(__file__).resolve().parent.parent


def test_decompose_json(capsys):
    code = cli.main(["decompose", "--n", "2", "--t", "0.74", "--eps", "0.2", "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["m"] == 3
    assert payload["B"] == 10
    assert payload["t_star"] == "5/8"


def test_decompose_bad_input_is_config_error(capsys):
    assert cli.main(["decompose", "--n", "2", "--t", "1.5", "--eps", "0.2"]) == cli.EXIT_CONFIG


def test_gen_measure_and_constants(tmp_path, capsys):
    sig = tmp_path / "sigma.txt"
    om = tmp_path / "omega.txt"
    assert cli.main(["gen-measure", "--kind", "cascade", "--n", "1", "--L", "5",
                     "--params", "a=0.3", "--seed", "4", "--out", str(sig)]) == 0
    assert cli.main(["gen-measure", "--kind", "power", "--n", "1", "--L", "5",
                     "--params", "exponent=0.5", "--out", str(om)]) == 0
    out = tmp_path / "constants.json"
    code = cli.main(["constants", "--sigma", str(sig), "--omega", str(om),
                     "--kernel", "hilbert", "--kappa", "2", "--depth", "3",
                     "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    names = {c["constant_name"] for c in payload["constants"]}
    assert {"A2", "cA2", "cA2*", "T(2)", "FT(2)", "BICT"} <= names
    assert payload["norm"]["value"] > 0


def test_gen_measure_roundtrip_matches_library(tmp_path):
    path = tmp_path / "m.txt"
    cli.main(["gen-measure", "--kind", "cascade", "--n", "2", "--L", "3",
              "--params", "a=0.25", "--seed", "9", "--out", str(path)])
    back = ms.read_measure(path)
    direct = ms.generate_doubling_measure(2, 3, 0.25, 9)
    assert np.array_equal(back.floats, direct.floats)


def test_verify_all_demo_config(tmp_path):
    out = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    code = cli.main(["verify", "all", "--config", str(REPO / "configs" / "demo.toml"),
                     "--out", str(out), "--csv", str(csv_out)])
    assert code == 0
    bundle = json.loads(out.read_text())
    assert len(bundle["reports"]) == 3
    assert all(rep["all_passed"] for rep in bundle["reports"])
    assert csv_out.read_text().count("verification") > 3


def test_verify_single_suite(tmp_path):
    code = cli.main(["verify", "tp-control", "--config", str(REPO / "configs" / "demo.toml")])
    assert code == 0


def test_verify_missing_config_is_config_error():
    assert cli.main(["verify", "all", "--config", "/does/not/exist.toml"]) == cli.EXIT_CONFIG


def test_verify_bad_scenario_field(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scenario": {"n": 1, "bogus": 2}}))
    assert cli.main(["verify", "all", "--config", str(bad)]) == cli.EXIT_CONFIG


def test_unknown_subcommand_is_config_error():
    assert cli.main(["frobnicate"]) == cli.EXIT_CONFIG
