import json

import numpy as np
import pytest
from click.testing import CliRunner

from levyexp import scenario as S
from levyexp.cli import main

BM = {"sigma2": 1.0, "gamma": 0.0}


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, scenarios, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"schema_version": 1, "scenarios": scenarios}))
    return str(p)


# -- exit codes -------------------------------------------------------------

def test_schema_error_exits_2(runner, tmp_path):
    f = _write(tmp_path, [{"id": "x", "mode": "killed", "q": -1, "xi": BM, "eta": BM}])
    r = runner.invoke(main, ["classify", "--scenario", f])
    assert r.exit_code == 2
    assert "/scenarios/0/q" in r.output


def test_unknown_id_exits_2(runner):
    assert runner.invoke(main, ["classify", "--id", "no_such_row"]).exit_code == 2


def test_bad_seed_list_exits_2(runner):
    assert runner.invoke(main, ["verify", "--id", "bm_bm", "--seeds", "a-b"]).exit_code == 2


def test_classify_golden_matches(runner):
    r = runner.invoke(main, ["classify", "--format", "json"])
    assert r.exit_code == 0, r.output
    rows = json.loads(r.output)
    assert len(rows) == len(S.load_golden())
    assert all(row["match"] for row in rows if "match" in row)


def test_classify_mismatch_exits_1(runner, tmp_path):
    sc = {"id": "x", "mode": "killed", "q": 1.0, "xi": BM, "eta": BM,
          "expected": {"support": {"shape": "Point", "params": {"at": 0.0}}}}
    assert runner.invoke(main, ["classify", "--scenario", _write(tmp_path, [sc])]).exit_code == 1


def test_divergent_unkilled_exits_3(runner, tmp_path):
    sc = {"id": "div", "mode": "unkilled", "q": 0.0,
          "xi": {"sigma2": 1.0, "gamma": -1.0, "flags": ["unkilled_integral_converges"]},
          "eta": {"drift": 1.0}}
    r = runner.invoke(main, ["simulate", "--scenario", _write(tmp_path, [sc]), "--n", "50",
                             "--params", '{"max_horizon": 32}'])
    assert r.exit_code == 3


def test_bad_params_json_exits_2(runner):
    assert runner.invoke(main, ["simulate", "--id", "bm_bm", "--n", "2", "--params", "{oops"]).exit_code == 2


# -- simulate ---------------------------------------------------------------

def test_simulate_single_row(runner):
    r = runner.invoke(main, ["simulate", "--id", "bm_bm", "--n", "1"])
    assert r.exit_code == 0
    lines = r.output.splitlines()
    assert all(ln.startswith("#") for ln in lines[:-2])
    assert lines[-2] == "value"
    float(lines[-1])


def test_simulate_equals_library(runner):
    r = runner.invoke(main, ["simulate", "--id", "xi_zero_poisson", "--n", "500", "--seed", "7"])
    sc = {s.id: s for s in S.load_golden()}["xi_zero_poisson"]
    lib = S.simulate_scenario(sc, 500, 7).values
    assert np.array_equal(S.read_csv_values(r.output), lib)


def test_simulate_out_directory(runner, tmp_path):
    out = tmp_path / "csv"
    r = runner.invoke(main, ["simulate", "--id", "bm_bm", "--id", "exp_identity", "--n", "10", "--out", str(out)])
    assert r.exit_code == 0
    assert sorted(p.name for p in out.iterdir()) == ["bm_bm_seed0.csv", "exp_identity_seed0.csv"]


# -- verify and report ------------------------------------------------------

def test_verify_bm_bm_and_report(runner, tmp_path):
    out = tmp_path / "rep"
    r = runner.invoke(main, ["verify", "--id", "bm_bm", "--n", "5000", "--seeds", "1-3", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert "stationarity_t0.5" in r.output
    rep = runner.invoke(main, ["report", str(out), "--format", "json"])
    assert rep.exit_code == 0
    assert json.loads(rep.output) == {"scenarios": 1, "passed": 1, "failed": []}


def test_negative_control_fails(runner, tmp_path):
    # a far-away constant start is not the stationary law; marking the test as
    # expected to pass makes verify fail
    sc = {"id": "ctl", "mode": "killed", "q": 1.0, "xi": BM, "eta": BM,
          "verify": {"stationarity": [{"t": 0.1, "input": "constant", "value": 1000.0}]}}
    r = runner.invoke(main, ["verify", "--scenario", _write(tmp_path, [sc]), "--n", "3000", "--seeds", "1-2"])
    assert r.exit_code == 1


def test_expected_failure_control_passes(runner, tmp_path):
    sc = {"id": "ctl", "mode": "killed", "q": 1.0, "xi": BM, "eta": BM,
          "verify": {"stationarity": [{"t": 0.1, "input": "constant", "value": 1000.0, "expect": "fail"}]}}
    r = runner.invoke(main, ["verify", "--scenario", _write(tmp_path, [sc]), "--n", "3000", "--seeds", "1-2"])
    assert r.exit_code == 0, r.output


def test_report_needs_files(runner, tmp_path):
    assert runner.invoke(main, ["report", str(tmp_path)]).exit_code == 2


def test_integrand_scenario_is_skipped(runner):
    r = runner.invoke(main, ["verify", "--id", "integrand_bm", "--n", "100", "--seeds", "1",
                             "--format", "json"])
    assert r.exit_code == 0
    assert json.loads(r.output)[0]["tests"] == []
