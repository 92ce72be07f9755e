import io
import subprocess
import sys

import numpy as np
import pytest

from swiptrelay.acceptance import c3_bound_order
from swiptrelay.cli import (CSV_HEADER, THETA_HEADER, ConfigError, SweepConfig, load_config, main,
                            parse_grid, parse_modes, read_rows, run_sweep)
from swiptrelay.channel import CsiMode


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_grid_and_modes():
    assert parse_grid("0:10:5") == (0.0, 5.0, 10.0)
    assert parse_grid("1, 2.5") == (1.0, 2.5)
    assert parse_grid("") == ()
    with pytest.raises(ConfigError):
        parse_grid("0:10:0")
    assert parse_modes("all") == tuple(CsiMode)
    assert parse_modes("inst,none") == (CsiMode.INSTANTANEOUS, CsiMode.NOCSI)
    with pytest.raises(ConfigError):
        parse_modes("inst,partial")


def test_default_sweep_has_27_rows(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run_cli(capsys, "sweep", "--rho-db", "0:40:5", "--samples", "20000", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 28
    rows = read_rows(out.read_text())
    assert {r["mode"] for r in rows} == {"instantaneous", "statistical", "nocsi"}
    assert all(r["seed"] == "1" and r["n_samples"] == "20000" for r in rows)


def test_exact_sweep_matches_mc_rows(tmp_path, capsys):
    common = ["--rho-db", "10,20", "--mode", "inst,stat"]
    run_cli(capsys, "sweep", *common, "--method", "exact", "--out", str(tmp_path / "a.csv"))
    run_cli(capsys, "sweep", *common, "--samples", "1000000", "--seed", "5", "--out", str(tmp_path / "m.csv"))
    exact = read_rows((tmp_path / "a.csv").read_text())
    mc = read_rows((tmp_path / "m.csv").read_text())
    assert len(exact) == len(mc) == 4
    for e, m in zip(exact, mc):
        assert (e["mode"], e["rho_db"]) == (m["mode"], m["rho_db"])
        assert e["stderr"] == "" and e["n_samples"] == ""
        assert abs(float(e["value"]) - float(m["value"])) < 4 * float(m["stderr"])


def test_empty_grid_is_config_error_and_writes_nothing(tmp_path, capsys):
    out = tmp_path / "none.csv"
    code, _, err = run_cli(capsys, "sweep", "--rho-db", "", "--out", str(out))
    assert code == 2 and "rho_db" in err
    assert not out.exists()


def test_method_unavailable_for_mode(capsys):
    code, _, err = run_cli(capsys, "sweep", "--rho-db", "10", "--mode", "nocsi", "--method", "exact")
    assert code == 2 and "nocsi" in err
    code, _, err = run_cli(capsys, "sweep", "--rho-db", "10", "--metric", "capacity", "--method", "exact")
    assert code == 2


def test_csv_round_trip():
    cfg = SweepConfig(modes=(CsiMode.INSTANTANEOUS,), metric="capacity", method="upper-bound",
                      rho_db=(0.0, 10.0))
    buf = io.StringIO()
    assert run_sweep(cfg, buf) == 2
    rows = read_rows(buf.getvalue())
    assert list(rows[0]) == CSV_HEADER
    from swiptrelay.analytic import capacity_ub_inst
    from swiptrelay.corrmat import exp_correlation
    ref = capacity_ub_inst(cfg.params, exp_correlation(3, 0.5).eigen(), exp_correlation(3, 0.8).eigen(), 10.0)
    assert float(rows[1]["value"]) == ref  # repr round-trips exactly


def test_high_snr_rows_carry_warnings():
    cfg = SweepConfig(modes=(CsiMode.STATISTICAL,), method="high-snr", rho_db=(10.0,))
    diag = io.StringIO()
    run_sweep(cfg, io.StringIO(), diag)
    assert "below 30 dB" in diag.getvalue()


def test_byte_identical_reruns(tmp_path, capsys):
    args = ["sweep", "--rho-db", "0:20:10", "--samples", "150000", "--seed", "9"]
    run_cli(capsys, *args, "--workers", "1", "--out", str(tmp_path / "1.csv"))
    run_cli(capsys, *args, "--workers", "4", "--out", str(tmp_path / "4.csv"))
    assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "4.csv").read_bytes()


def test_config_file_with_overrides(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[system]\nn_antennas = 2\ngamma_th_db = 3\n[correlation]\nr_rx = 0.3\n"
                   "[sweep]\nmodes = statistical\nrho_db = 0:10:5\nseed = 4\n")
    cfg = load_config(str(ini))
    assert cfg.params.n == 2 and cfg.params.gamma_th_db == pytest.approx(3.0)
    assert cfg.corr.r_rx == 0.3 and cfg.corr.r_tx == 0.8
    assert cfg.modes == (CsiMode.STATISTICAL,) and cfg.rho_db == (0.0, 5.0, 10.0) and cfg.seed == 4
    args = type("A", (), {"rho_db": "7", "seed": 11, "mode": None, "metric": None, "method": None,
                          "samples": None, "workers": None})()
    cfg = load_config(str(ini), args)
    assert cfg.rho_db == (7.0,) and cfg.seed == 11 and cfg.params.n == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[system]\neta = lots\n")
    with pytest.raises(ConfigError) as info:
        load_config(str(bad))
    assert info.value.field == "eta"


def test_matrix_file_config(tmp_path, capsys):
    m = tmp_path / "r.txt"
    np.savetxt(m, np.array([[1.0, 0.2], [0.2, 1.0]]))
    ini = tmp_path / "c.ini"
    ini.write_text(f"[system]\nn_antennas = 2\n[correlation]\nrx_matrix_file = {m}\n"
                   "[sweep]\nmethod = exact\nmodes = inst\nrho_db = 10\n")
    code, out, _ = run_cli(capsys, "sweep", "--config", str(ini))
    assert code == 0 and len(out.splitlines()) == 2


def test_optimize_theta_rows(capsys):
    code, out, _ = run_cli(capsys, "optimize-theta", "--rho-db", "10,30", "--mode", "inst")
    assert code == 0
    rows = read_rows(out)
    assert list(rows[0]) == THETA_HEADER and len(rows) == 2
    for r in rows:
        assert 0.01 <= float(r["theta_star"]) <= 0.99
        assert float(r["value"]) >= float(r["value_at_half"])
    _, out_s, _ = run_cli(capsys, "optimize-theta", "--rho-db", "30", "--mode", "stat")
    assert float(read_rows(out_s)[0]["value"]) < float(rows[1]["value"])
    code, _, _ = run_cli(capsys, "optimize-theta", "--rho-db", "30", "--mode", "inst,stat")
    assert code == 2


def test_corr_info(capsys):
    code, out, _ = run_cli(capsys, "corr-info", "--n", "3", "--r", "0.5")
    assert code == 0
    raw = [float(v) for v in out.splitlines()[1].split(":")[1].split()]
    assert raw == pytest.approx([(9 + 33 ** 0.5) / 8, 0.75, (9 - 33 ** 0.5) / 8], abs=1e-11)
    assert "principal vector" in out
    code, out, _ = run_cli(capsys, "corr-info", "--n", "2", "--r", "0")
    assert code == 0
    code, _, err = run_cli(capsys, "corr-info", "--n", "2", "--r", "1.5")
    assert code == 2


def test_verify_catches_bound_mutation():
    assert c3_bound_order("fast").passed
    assert not c3_bound_order("full", lb_leading_factor=2.0).passed


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "swiptrelay", "corr-info", "--n", "2"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("n = 2")
