import json
import os
import subprocess

import pytest

uc = pytest.importorskip("unitychain")

P = 2**61 - 1

BASIC = """
node_count = 8
horizon = 20
seed = 42
workload = fixed 3
"""


def test_field_modulus():
    assert uc.field_modulus() == P


def test_majority_threshold():
    assert uc.majority_threshold(4) == 3
    assert uc.majority_threshold(100) == 51
    assert uc.majority_threshold(10) == 6


def test_shamir_roundtrip():
    shares = uc.split_secret(123456789, 7, 4, seed=9)
    assert len(shares) == 7
    assert uc.reconstruct_secret(shares[:4], 4) == 123456789
    assert uc.reconstruct_secret(shares[2:6], 4) == 123456789


def test_dkg_sign_verify():
    assert uc.dkg_sign_verify(7, 4, b"hello".decode(), seed=5)


def test_kendall_tau():
    assert uc.kendall_tau([0, 1, 2, 3], [0, 1, 2, 3]) == 0.0
    assert uc.kendall_tau([0, 1, 2, 3], [3, 2, 1, 0]) == 1.0


def test_scenario_validation():
    assert uc.validate_scenario(BASIC) == []
    errors = uc.validate_scenario("node_count = 2\nbogus_key = 1\n")
    assert any("bogus_key" in e for e in errors)
    assert any("node_count" in e for e in errors)


def test_run_scenario_deterministic():
    a = uc.run_scenario(BASIC)
    b = uc.run_scenario(BASIC)
    assert a["violations"] == []
    assert a["log"] == b["log"]
    assert a["downtime_cycles"] == 0
    assert a["epoch_blocks"] >= 1
    header = json.loads(a["log"].splitlines()[0])
    assert header["type"] == "header"
    assert header["seed"] == 42


def test_analyze_matches_run():
    a = uc.run_scenario(BASIC)
    m = uc.analyze_log(a["log"])
    assert m["summary"] == a["summary"]


@pytest.mark.skipif("UNITYCHAIN_BIN" not in os.environ,
                    reason="CLI binary path not provided")
def test_cli_run(tmp_path):
    scenario = tmp_path / "s.txt"
    scenario.write_text(BASIC)
    out = tmp_path / "out"
    rc = subprocess.run(
        [os.environ["UNITYCHAIN_BIN"], "run", "--scenario", str(scenario),
         "--out", str(out)],
        capture_output=True, text=True)
    assert rc.returncode == 0, rc.stderr
    assert (out / "events.jsonl").exists()
    assert (out / "report.csv").exists()
    rc2 = subprocess.run(
        [os.environ["UNITYCHAIN_BIN"], "replay", "--log",
         str(out / "events.jsonl"), "--verify"],
        capture_output=True, text=True)
    assert rc2.returncode == 0, rc2.stderr
    assert "byte for byte" in rc2.stdout
