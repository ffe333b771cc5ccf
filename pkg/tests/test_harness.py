import json
import math

import numpy as np
import pytest
import yaml

from latticemc.cli import main as cli_main
from latticemc.harness import (ConfigError, default_config, dump_config, export,
                               load_config, parse_config, predict, read_csv,
                               read_summary, run_angle_sweep, run_delta_sweep,
                               run_density_profile, run_experiment)
from latticemc.model import Configuration

# a deliberately tiny but physically valid setup for fast end-to-end runs
TINY = {
    "lattice": {"theta_deg": 30.0, "U0": 100.0, "Gamma_p": 5.0},
    "modulation": {"kind": "parallel", "phi_deg": 24.0, "epsilon": 0.05},
    "grid": {"start": -2.0, "stop": 2.0, "count": 5},
    "sim": {"n_atoms": 40, "n_periods": 4.0, "t_thermalize": 2.0, "seed": 3},
    "scan": {"count": 3, "half_span_omega_x": 0.5},
    "profile": {"n_bins": 64, "n_periods_window": 4},
}


def tiny_config(experiment, **extra):
    data = {"experiment": experiment, **yaml.safe_load(yaml.safe_dump(TINY))}
    for sect, kv in extra.items():
        data.setdefault(sect, {}).update(kv)
    return parse_config(data)


# -- configuration ------------------------------------------------------------

def test_minimal_config_defaults():
    cfg = default_config("predict")
    assert cfg.experiment == "predict"
    assert math.degrees(cfg.lattice.theta) == pytest.approx(30.0)
    assert cfg.lattice.U0 == 200.0
    # Gamma_p defaults to Omega_x, dt to the stability bound
    assert cfg.lattice.Gamma_p == pytest.approx(cfg.omega_x)
    assert cfg.sim.dt == pytest.approx(0.05 / cfg.omega_x)
    assert cfg.sim.t_thermalize == pytest.approx(300.0 / cfg.lattice.Gamma_p)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_config({"experiment": "predict", "lattice": {"theta_deg": 30, "bogus": 1}})
    with pytest.raises(ConfigError, match="wholesection"):
        parse_config({"experiment": "predict", "wholesection": {}})
    # multiple unknowns are all listed
    with pytest.raises(ConfigError, match="lattice.bad1.*sim.bad2"):
        parse_config({"experiment": "predict", "lattice": {"bad1": 1}, "sim": {"bad2": 2}})


def test_theta_range_rejected():
    with pytest.raises(ConfigError, match="theta_deg"):
        parse_config({"experiment": "predict", "lattice": {"theta_deg": 95.0}})


def test_bad_experiment_rejected():
    with pytest.raises(ConfigError, match="experiment"):
        parse_config({"experiment": "warp-drive"})


def test_delta_units():
    cfg = parse_config({"experiment": "scan-delta",
                        "modulation": {"delta": 2.0, "delta_units": "omega_x"}})
    assert cfg.delta == pytest.approx(2.0 * cfg.omega_x)
    cfg = parse_config({"experiment": "scan-delta",
                        "modulation": {"delta": 2.0, "delta_units": "natural"}})
    assert cfg.delta == 2.0


def test_config_round_trip(tmp_path):
    cfg = tiny_config("scan-delta")
    text = dump_config(cfg)
    path = tmp_path / "cfg.yaml"
    path.write_text(text)
    again = load_config(path)
    assert dump_config(again) == text  # semantically identical (fixed point)


def test_rate_modulation_defaults():
    cfg = default_config("scan-delta")
    par = cfg.modulation(Configuration.PARALLEL, cfg.phi, 1.0)
    perp = cfg.modulation(Configuration.PERP, cfg.phi, 1.0)
    assert par.rate_modulation == 0.0
    assert perp.rate_modulation == pytest.approx(0.4)
    # switched-off modulation carries no pump channel either
    off = cfg.modulation(Configuration.PERP, cfg.phi, 1.0, epsilon=0.0)
    assert off.rate_modulation == 0.0


def test_stability_violation_is_config_error():
    with pytest.raises(ConfigError, match="dt"):
        parse_config({"experiment": "predict", "sim": {"dt": 0.1}})


# -- experiments --------------------------------------------------------------

def test_predict_record():
    rec = predict(default_config("predict"))
    assert rec.experiment == "predict"
    th = rec.theory
    assert th["parallel"]["phase_matched"] is True
    assert th["perp"]["phase_matched"] is False
    assert th["perp"]["residual"] == pytest.approx(0.5)
    assert th["parallel"]["delta_res_over_omega_x"][0] == pytest.approx(1.62695, abs=1e-4)
    assert th["perp"]["delta_res_over_omega_x"][0] == pytest.approx(2.62695, abs=1e-4)


def test_delta_sweep_tiny_and_null_point():
    cfg = tiny_config("scan-delta", modulation={"epsilon": 0.0},
                      grid={"start": 0.5, "stop": 1.0, "count": 1})
    rec = run_delta_sweep(cfg)
    pt = rec.results["points"][0]
    assert "error" not in pt
    # no drive: v_cm consistent with zero
    assert abs(pt["v_cm"][0]) < 4.0 * pt["stderr"][0]


def test_delta_sweep_deterministic_exports(tmp_path):
    cfg = tiny_config("scan-delta")
    for sub in ("a", "b"):
        rec = run_delta_sweep(cfg)
        export(rec, tmp_path / sub)
    for name in ("scan_parallel.csv", "scan_delta_summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_angle_sweep_needs_three_angles():
    cfg = tiny_config("scan-angle", sweep={"angles_deg": [20.0, 24.0]})
    with pytest.raises(ConfigError, match="3 angles"):
        run_angle_sweep(cfg)


def test_export_and_reimport_full_precision(tmp_path):
    cfg = tiny_config("scan-delta")
    rec = run_delta_sweep(cfg)
    export(rec, tmp_path)
    cols = read_csv(tmp_path / "scan_parallel.csv")
    assert list(cols) == ["delta", "delta_over_omega_x", "v_mod", "v_cm_x", "v_cm_x_stderr"]
    got_v = [p["v_cm"][0] for p in rec.results["points"] if "error" not in p]
    np.testing.assert_array_equal(cols["v_cm_x"], got_v)  # bit-exact round trip
    summary = read_summary(tmp_path / "scan_delta_summary.json")
    assert summary["schema_version"] == "1"
    assert summary["theory"]["parallel"]["delta_res"]
    assert summary["results"]["peaks"] is not None
    assert "wall_clock" not in json.dumps(summary)


def test_density_profile_no_drive_reports_no_grating(tmp_path):
    cfg = tiny_config("density-profile", modulation={"epsilon": 0.0},
                      sim={"n_atoms": 120, "n_periods": 8.0})
    rec = run_density_profile(cfg)
    for kind in ("parallel", "perp"):
        assert rec.results["profiles"][kind]["no_grating"] is True
    files = export(rec, tmp_path)
    assert any(p.name == "profile_parallel.csv" for p in files)
    prof = read_csv(tmp_path / "profile_perp.csv")
    assert {"x", "density", "density_plus", "density_minus"} == set(prof)


def test_run_experiment_dispatch():
    rec = run_experiment(tiny_config("predict"))
    assert rec.experiment == "predict"


# -- CLI ----------------------------------------------------------------------

def test_cli_predict(tmp_path, capsys):
    code = cli_main(["predict", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    data = json.loads(out)
    assert data["experiment"] == "predict"
    assert (tmp_path / "predict_summary.json").exists()


def test_cli_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("lattice:\n  theta_deg: 140\n")
    code = cli_main(["predict", "--config", str(bad), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["type"] == "ConfigError"
    assert "theta" in payload["error"]["message"]


def test_cli_missing_config_file(tmp_path, capsys):
    code = cli_main(["predict", "--config", str(tmp_path / "nope.yaml")])
    assert code == 2
    assert "error" in json.loads(capsys.readouterr().err)


def test_cli_overrides(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.yaml"
    cfgfile.write_text(yaml.safe_dump(TINY))
    code = cli_main(["scan-delta", "--config", str(cfgfile), "--seed", "77",
                     "--atoms", "25", "--out", str(tmp_path / "o")])
    assert code == 0
    summary = read_summary(tmp_path / "o" / "scan_delta_summary.json")
    assert summary["seed"] == 77
    assert summary["config"]["sim"]["n_atoms"] == 25


def test_cli_echo_config(capsys):
    code = cli_main(["predict", "--echo-config"])
    assert code == 0
    data = yaml.safe_load(capsys.readouterr().out)
    assert data["experiment"] == "predict"


def test_workers_do_not_change_results(tmp_path):
    base = tiny_config("scan-delta")
    rec1 = run_delta_sweep(base)
    cfg2 = tiny_config("scan-delta", output={"workers": 2})
    rec2 = run_delta_sweep(cfg2)
    for a, b in zip(rec1.results["points"], rec2.results["points"]):
        assert a["v_cm"] == b["v_cm"]
        assert a["stderr"] == b["stderr"]


def test_dump_snapshots_csv(tmp_path):
    cfg = tiny_config("density-profile", modulation={"epsilon": 0.0},
                      sim={"n_atoms": 8, "n_periods": 2.0},
                      output={"dump_snapshots": True})
    rec = run_density_profile(cfg)
    files = export(rec, tmp_path)
    snap = tmp_path / "snapshots_parallel.csv"
    assert snap in files
    cols = read_csv(snap)
    assert list(cols) == ["t", "atom_id", "x", "y", "z", "px", "py", "pz", "s"]
    assert set(np.unique(cols["s"])) <= {-1.0, 1.0}
    # one row per atom per snapshot
    assert len(cols["t"]) % 8 == 0
