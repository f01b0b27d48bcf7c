import json
import subprocess
import sys

import pytest

from rsacsma import cli, validation
from rsacsma.config import ConfigError, parse_config


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2))
    return str(p)


def body(path):
    return [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]


RADIO = {"tx_power_dbm": 20, "sense_threshold_dbm": -65, "path_loss_exponent": 4,
         "bandwidth_hz": 1e7}


def test_unknown_key_reports_line(tmp_path, capsys):
    text = '{\n  "command": "map-curve",\n  "radio": {\n    "tx_power_dBm": 20\n  }\n}'
    p = tmp_path / "bad.json"
    p.write_text(text)
    rc = cli.main(["map-curve", "--config", str(p), "--output", str(tmp_path / "o.csv")])
    err = capsys.readouterr().err
    assert rc == 1
    assert "tx_power_dBm" in err and "line 4" in err


@pytest.mark.parametrize("text", [
    '{"radio": {"path_loss_exponent": 2}}',
    '{"sweep": {"beta_db": [5, 0]}}',
    '{"sweep": {"beta_db": []}}',
    '{"deployment": {"torus_side_m": 1, "disk_radius_m": 1}}',
    '{"nonsense": 1}',
    '{not json',
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text, "map-curve")


def test_missing_output_is_config_error(tmp_path):
    assert cli.main(["map-curve"]) == 1
    assert cli.main(["map-curve", "--workers", "0", "--output", str(tmp_path / "x")]) == 1


def test_map_curve_columns_and_determinism(tmp_path):
    cfg = write(tmp_path, {"command": "map-curve", "radio": RADIO,
                           "deployment": {"disk_radius_m": 1500, "master_seed": 3},
                           "sweep": {"lambda_a_per_m2": [1e-5, 1e-4, 1e-3]},
                           "monte_carlo": {"replications": 200}})
    a, b, c = (str(tmp_path / f"{n}.csv") for n in "abc")
    assert cli.main(["map-curve", "--config", cfg, "--output", a, "--no-timestamp"]) == 0
    assert cli.main(["map-curve", "--config", cfg, "--output", b, "--no-timestamp",
                     "--workers", "3"]) == 0
    assert open(a).read() == open(b).read()
    rows = body(a)
    assert rows[0] == "lambda_a_per_m2,map_rsa,map_mhpp2,map_mc,map_mc_ci"
    assert len(rows) == 4
    head = json.loads(open(a).readline()[2:])
    assert head["seed"] == 3 and head["tool"].startswith("rsacsma")
    assert cli.main(["map-curve", "--config", cfg, "--output", c, "--seed", "4"]) == 0
    assert body(c) != rows
    assert any(ln.startswith("# generated") for ln in open(c))


def test_density_curve(tmp_path):
    cfg = write(tmp_path, {"radio": RADIO,
                           "deployment": {"ap_density_per_m2": 1e-4, "torus_side_m": 4000},
                           "sweep": {"t": [0.0, 0.5, 1.0]},
                           "monte_carlo": {"replications": 5}})
    out = str(tmp_path / "d.csv")
    assert cli.main(["density-curve", "--config", cfg, "--output", out]) == 0
    rows = body(out)
    assert rows[0] == "t,rho_per_m2,theta,theta_mc,theta_mc_ci" and len(rows) == 4


def test_pcf_commands(tmp_path):
    est = str(tmp_path / "e.csv")
    cfg = write(tmp_path, {"sweep": {"coverage": [0.3]},
                           "pcf": {"patterns": 5, "torus_side_dinh": 20}})
    assert cli.main(["pcf-estimate", "--config", cfg, "--output", est]) == 0
    assert body(est)[0] == "r_over_dinh,g"
    fit_cfg = write(tmp_path, {"pcf": {"table_csv": est}, "sweep": {"coverage": [0.3]}},
                    "fit.json")
    fits = str(tmp_path / "f.csv")
    assert cli.main(["pcf-fit", "--config", fit_cfg, "--output", fits]) == 0
    assert body(fits)[0] == "coverage,c1,c2" and len(body(fits)) == 2
    cov_cfg = write(tmp_path, {"radio": RADIO, "pcf": {"fits_csv": fits},
                               "sweep": {"beta_db": [0.0, 10.0]}}, "cov.json")
    cov = str(tmp_path / "c.csv")
    assert cli.main(["coverage-curve", "--config", cov_cfg, "--output", cov]) == 0
    assert body(cov)[0] == "beta_db,p_cov"
    solve = write(tmp_path, {"sweep": {"coverage": [0.1]},
                             "pcf": {"solver_n_r": 512, "solver_n_rho_steps": 100}}, "s.json")
    out = str(tmp_path / "s.csv")
    assert cli.main(["pcf-solve", "--config", solve, "--output", out]) == 0
    two = write(tmp_path, {"sweep": {"coverage": [0.1, 0.2]}}, "two.json")
    assert cli.main(["pcf-solve", "--config", two, "--output", out]) == 1


def test_coverage_curve_with_simulation(tmp_path):
    raw = str(tmp_path / "raw.csv")
    cfg = write(tmp_path, {"radio": RADIO,
                           "deployment": {"ap_density_per_m2": 1e-4, "torus_side_m": 5400},
                           "sweep": {"beta_db": [0.0, 10.0]},
                           "monte_carlo": {"replications": 3, "raw_dump_path": raw}})
    out = str(tmp_path / "c.csv")
    assert cli.main(["coverage-curve", "--config", cfg, "--output", out]) == 0
    assert body(out)[0] == "beta_db,p_cov,p_cov_mc,p_cov_mc_ci"
    assert open(raw).readline().startswith("replication,beta_db")


def test_numerical_failure_exit(tmp_path):
    cfg = write(tmp_path, {"sweep": {"coverage": [0.49]}})
    assert cli.main(["pcf-solve", "--config", cfg, "--output", str(tmp_path / "x")]) == 2


@pytest.mark.parametrize("ok,code", [(True, 0), (False, 3)])
def test_validate_exit_status(monkeypatch, ok, code):
    fake = [validation.CriterionResult(1, "stub", ok, "")]
    monkeypatch.setattr(validation, "run_all", lambda echo=print: fake)
    assert cli.main(["validate"]) == code


def test_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "rsacsma.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "map-curve" in res.stdout
