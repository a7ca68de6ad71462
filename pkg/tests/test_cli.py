"""CLI verbs: outputs, exit codes, config handling, idempotence."""

import csv
import json

import pytest

from phycov.cli import main


def run(argv):
    return main(argv)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_usage_error_exit_code():
    assert run(["estimate"]) == 1  # missing required flags
    assert run(["no-such-verb"]) == 1


def test_constants_verb(tmp_path):
    assert run(["constants", "--weight", "min_xx", "-o", str(tmp_path)]) == 0
    rows = {r["name"]: float(r["value"]) for r in read_csv(tmp_path / "constants.csv")}
    assert rows["psi_hy"] == pytest.approx(0.25, abs=1e-12)
    assert rows["psi1"] == pytest.approx(1.0, abs=1e-10)
    assert (tmp_path / "run_meta.json").exists()


def test_simulate_and_estimate_roundtrip(tmp_path):
    out1 = tmp_path / "obs"
    assert run(["observe", "--scheme", "equidistant", "--n", "600", "--n-fine", "6000",
                "--seed", "3", "-o", str(out1)]) == 0
    obs = out1 / "observations.csv"
    assert obs.exists()
    out2 = tmp_path / "est"
    assert run(["estimate", "--estimator", "phy_refresh", "--x", str(obs),
                "--bn", str(1 / 600), "-o", str(out2)]) == 0
    rows = read_csv(out2 / "phy_refresh.csv")
    assert len(rows) > 10  # step path
    meta = json.loads((out2 / "run_meta.json").read_text())
    assert abs(meta["value"] - 4e-4) < 4e-4  # order of magnitude of sigma^2


def test_avar_verb(tmp_path):
    out1 = tmp_path / "obs"
    run(["observe", "--scheme", "equidistant", "--n", "900", "--n-fine", "9000",
         "--seed", "4", "-o", str(out1)])
    out2 = tmp_path / "avar"
    assert run(["avar", "--x", str(out1 / "observations.csv"), "--bn", str(1 / 900),
                "-o", str(out2)]) == 0
    rows = read_csv(out2 / "avar.csv")
    assert {"k", "r_k", "spot_x", "w2_hat"} <= set(rows[0])


def test_sample_verb_pair_scheme(tmp_path):
    assert run(["sample", "--scheme", "lo_mackinlay", "--p1", "0.4", "--p2", "0.2",
                "--n", "500", "--seed", "9", "-o", str(tmp_path)]) == 0
    assert (tmp_path / "times.csv").exists()
    assert (tmp_path / "times2.csv").exists()


def test_mc_verb_outputs_and_idempotence(tmp_path):
    args = ["mc", "--scenario", "s1", "--sampling", "equidistant", "--reps", "4",
            "--n", "600", "--seed", "11", "-o", str(tmp_path)]
    assert run(args) == 0
    first = (tmp_path / "per_rep.csv").read_bytes()
    for name in ("per_rep.csv", "bias_rmse.csv", "quantiles.csv", "run_meta.json"):
        assert (tmp_path / name).exists()
    assert run(args) == 0  # identical rerun overwrites identically
    assert (tmp_path / "per_rep.csv").read_bytes() == first


def test_mc_config_file_and_overrides(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"n": 600, "reps": 3}))
    assert run(["mc", "--config", str(cfgfile), "--seed", "1", "-o", str(tmp_path),
                "--set", "estimators=rv"]) == 0
    rows = read_csv(tmp_path / "per_rep.csv")
    assert {r["estimator"] for r in rows} == {"rv"}


def test_mc_unknown_config_key_rejected(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"frequency": 600}))
    assert run(["mc", "--config", str(cfgfile), "-o", str(tmp_path)]) == 2
    assert run(["mc", "--set", "frequencies=1", "-o", str(tmp_path)]) == 2


def test_diag_verb_hitting(tmp_path):
    assert run(["diag", "--scheme", "hitting", "--u", "0.01", "--v", "0.04",
                "--n", "3600", "--durations", "4000", "--seed", "2",
                "-o", str(tmp_path)]) == 0
    rows = {r["name"]: r for r in read_csv(tmp_path / "diag_summary.csv")}
    g1 = float(rows["g_1"]["empirical"])
    assert abs(g1 - float(rows["g_1"]["closed_form"])) < 0.05


def test_env_outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("PHYCOV_OUTDIR", str(tmp_path / "envout"))
    assert run(["constants", "--weight", "min_xx"]) == 0
    assert (tmp_path / "envout" / "constants.csv").exists()
