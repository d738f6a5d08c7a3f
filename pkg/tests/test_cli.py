import json
import shutil

import pytest

from sdyang import catalog as cat
from sdyang import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    data = json.loads(out.out) if out.out.strip() else None
    return code, data, out.err


def test_catalog_list_and_show(capsys):
    code, data, _ = run(capsys, "catalog", "list")
    assert code == 0 and "burns" in data["report"]["results"]["metrics"]
    code, data, _ = run(capsys, "catalog", "show", "eh")
    assert code == 0 and data["report"]["results"]["name"] == "eguchi_hanson"
    code, data, _ = run(capsys, "catalog", "show", "triangular")
    assert code == 0 and data["report"]["results"]["name"] == "triangular"


def test_report_layout(capsys):
    code, data, _ = run(capsys, "catalog", "list")
    rep, env = data["report"], data["envelope"]
    assert rep["schema"] == cli.SCHEMA and rep["verdict"] == "pass"
    assert set(env) == {"checksum", "elapsed_s", "threads", "backend"}
    assert env["checksum"] == cli.report_checksum(json.dumps(data))


def test_check_metric_with_parameter(capsys):
    code, data, _ = run(capsys, "check-metric", "eguchi_hanson", "--a", "1", "--grid", "9")
    assert code == 0
    assert data["report"]["config"]["params"] == {"a": 1.0}
    assert data["report"]["results"]["measured"]["half_flat"] is True


def test_check_yang_non_solution(capsys):
    code, data, _ = run(capsys, "check-yang", "flat", "--field", "exp(z*zt), 0; 0, exp(z*zt)",
                        "--grid", "9")
    res = data["report"]["results"]
    assert code == cli.EXIT_FAIL
    assert res["R3"] == pytest.approx(1.0) and res["R1"] == 0.0
    assert res["equivalence"]["rel"] <= 1e-12


def test_check_yang_sampled_profile(capsys):
    code, data, _ = run(capsys, "check-yang", "burns", "harmonic", "--grid", "17",
                        "--tol-profile", "sampled")
    assert code == 0 and data["report"]["results"]["profile"] == "sampled"


def test_check_k(capsys):
    code, data, _ = run(capsys, "check-k", "flat", "--field", "z*w + zt, 0; 0, 1", "--grid", "9")
    assert code == 0
    code, data, _ = run(capsys, "check-k", "flat", "--field", "z*w*zt, zt^2; w*wt, z", "--grid", "9")
    assert code == cli.EXIT_FAIL


def test_backlund_verdicts(capsys):
    code, data, _ = run(capsys, "backlund", "flat", "triangular", "--k", "1", "--grid", "9")
    assert code == cli.EXIT_PASS and data["report"]["verdict"] == "pass"
    code, data, _ = run(capsys, "backlund", "fubini_study", "triangular", "--k", "1", "--grid", "9")
    assert code == cli.EXIT_OBSTRUCTED
    assert data["report"]["results"]["obstruction"]["probe_nonvanishing"] is True


def test_backlund_convergence_study(capsys):
    code, data, _ = run(capsys, "backlund", "burns", "triangular", "--k", "1", "--grid", "9,17,33")
    res = data["report"]["results"]
    assert code == 0 and res["order"] >= 3.5
    assert [r["n"] for r in res["rows"]] == [9, 17, 33]


def test_orbit(capsys):
    code, data, _ = run(capsys, "orbit", "flat", "harmonic", "--grid", "9",
                        "--moves", "conjugate,transform:1")
    steps = data["report"]["results"]["steps"]
    assert code == 0 and [s["move"]["kind"] for s in steps] == ["seed", "conjugate", "transform"]


def test_heavenly_and_csv(capsys, tmp_path):
    out = tmp_path / "res.csv"
    code, data, _ = run(capsys, "heavenly", "--theta", "exp(0.6*z + 0.8*w)*(0.8*zt - 0.6*wt)",
                        "--csv", str(out))
    assert code == 0 and data["report"]["results"]["agree"] is True
    assert out.read_text().startswith("x1,x2,x3,x4,re00,im00")


def test_convergence_derivative_csv(capsys, tmp_path):
    out = tmp_path / "conv.csv"
    code, data, _ = run(capsys, "convergence", "derivative", "burns", "--csv", str(out))
    assert code == 0 and data["report"]["results"]["order"] > 3.8
    lines = out.read_text().splitlines()
    assert lines[0] == "n,h,error,order" and lines[-1].startswith("fit,")


def test_convergence_plateau_flag(capsys):
    code, data, _ = run(capsys, "convergence", "equivalence", "flat")
    res = data["report"]["results"]
    assert code == 0 and res["plateau"] is True and res["order"] is None


def test_config_file_sets_defaults(capsys, tmp_path):
    conf = tmp_path / "run.ini"
    conf.write_text("[sdyang]\ngrid = 9\nk = 1\nsolver_tol = 1e-11\n")
    code, data, _ = run(capsys, "backlund", "flat", "triangular", "--config", str(conf))
    assert code == 0 and data["report"]["config"]["solver_tol"] == 1e-11
    code, data, _ = run(capsys, "backlund", "flat", "triangular", "--config", str(conf),
                        "--solver-tol", "1e-12")
    assert data["report"]["config"]["solver_tol"] == 1e-12


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, data, _ = run(capsys, "catalog", "list", "--out", str(out))
    assert data is None and json.loads(out.read_text())["report"]["verdict"] == "pass"


@pytest.mark.parametrize("argv", [
    ["backlund", "nosuch", "triangular"],
    ["backlund", "flat", "nosuch"],
    ["check-yang", "flat", "--grid", "10"],
    ["check-metric", "burns", "--q", "1"],
    ["check-yang", "flat", "--field", "z*", "--grid", "9"],
    ["convergence", "nosuch"],
    ["backlund", "flat", "triangular", "--config", "/nonexistent.ini"],
])
def test_usage_errors(capsys, argv):
    code, data, err = run(capsys, *argv)
    assert code == cli.EXIT_USAGE and data is None and "error" in err


def test_unknown_command_is_usage(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_catalog_env_override(capsys, tmp_path, monkeypatch):
    p = tmp_path / "c.ini"
    shutil.copy(cat.default_path(), p)
    monkeypatch.setenv("SDYANG_CATALOG", str(p))
    code, data, _ = run(capsys, "catalog", "list")
    assert code == 0 and cat.default_catalog().path == str(p)
