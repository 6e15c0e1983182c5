import math

import numpy as np
import pytest

from lmgpolaron.cli import main
from lmgpolaron.config import ConfigError, RunConfig, parse_config, parse_config_text
from lmgpolaron.errors import ValidationError
from lmgpolaron.sweeps import (ResultTable, SweepSpec, grid, run_magnetization_grid,
                               run_occupation, run_spectrum, run_sweep, run_wtd)


def test_config_defaults_and_errors(tmp_path):
    cfg = parse_config_text("h = 2\n# comment\ngamma_x = 0.5  # trailing\n")
    assert (cfg.eta, cfg.omega_c, cfg.beta) == (2 * math.pi * 0.1, 1.0, 1.79 / 2)
    with pytest.raises(ConfigError, match="'h'"):
        parse_config_text("gamma_x = 1\n")
    with pytest.raises(ConfigError, match="line 2: field 'n_spins'"):
        parse_config_text("h = 1\nn_spins = 2.5\n")
    with pytest.raises(ConfigError, match="line 1: field 'colour'"):
        parse_config_text("colour = blue\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("h = 1\njust words\n")
    with pytest.raises(ConfigError, match="line 3: field 'h'"):
        parse_config_text("h = 1\nbeta = 2\nh = 3\n")
    with pytest.raises(ConfigError, match="field 'frame'"):
        parse_config_text("h = 1\nframe = sideways\n")
    with pytest.raises(ValidationError, match="line 2"):
        parse_config_text("h = 1\ngamma_x = -1\n")
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.cfg")


def test_config_round_trip(tmp_path):
    cfg = parse_config_text("h = 1.3\ngamma_x = 0.1\nbeta = 0.7\nframe = bms\nseed = 9\n")
    path = tmp_path / "c.cfg"
    path.write_text(cfg.format())
    assert parse_config(path) == cfg
    assert parse_config(path, {"beta": 3.0}).beta == 3.0


def test_table_round_trips():
    t = ResultTable(["x", "y", "skipped"], [[1.0, np.nan, 1.0], [0.1, 2.5, 0.0]],
                    {"h": 1.0, "note": "a"}).stamped()
    for back in (ResultTable.from_csv(t.to_csv()), ResultTable.from_json(t.to_json())):
        assert back.columns == t.columns
        assert np.array_equal(back.rows, t.rows, equal_nan=True)
        assert back.metadata == t.metadata
    assert "timestamp" not in t.payload()["metadata"]


def test_spectrum_table():
    cfg = RunConfig(h=1.0, n_spins=1000)
    gam = grid(0, 2, 11)
    t = run_spectrum(cfg, gam, 3)
    assert t.column("skipped").tolist() == [0] * 5 + [1] + [0] * 5
    small = run_spectrum(RunConfig(h=1.0, n_spins=10), gam, 3)

    def worst(table):
        ok = table.column("skipped") == 0
        return np.nanmax(np.abs(table.column("exact_E0") - table.column("bosonic_E0"))[ok]
                         / np.abs(table.column("exact_E0")[ok]))

    assert worst(small) > worst(t)
    with pytest.raises(ValidationError):
        run_spectrum(RunConfig(h=1.0, n_spins=3), gam, 5)


def test_magnetization_table():
    gam = grid(0.5, 1.5, 11)
    t = run_magnetization_grid(RunConfig(h=1.0, n_spins=200), [50.0], gam)
    exact = t.column("exact_jz_per_spin")
    assert np.all(exact[:5] > 0.49) and exact[-1] < 0.35
    other = run_magnetization_grid(RunConfig(h=1.0, n_spins=200, eta=3.0), [50.0], gam, ["exact"])
    assert np.array_equal(other.column("exact_jz_per_spin"), exact)


def test_occupation_table_peaks():
    t = run_occupation(RunConfig(h=1.0), grid(0, 2, 1001))
    g = t.column("gamma_x")
    pol = t.column("occupation_mode_polaron")
    bms = t.column("occupation_mode_bms")
    assert abs(g[np.nanargmax(pol)] - 1.0) < 0.01
    assert abs(g[np.nanargmax(bms)] - 1.1) < 0.01
    w = t.column("omega_bms")
    assert w[np.nanargmin(w)] < 0.05 and abs(g[np.nanargmin(w)] - 1.1) < 0.01


def test_wtd_tables():
    cfg = RunConfig(h=1.0)
    a = run_wtd(cfg, taus=np.linspace(0, 50, 6))
    n = run_wtd(cfg, taus=np.linspace(0, 50, 6), mode="numeric")
    assert np.allclose(a.rows, n.rows, rtol=1e-8)
    cut = run_wtd(cfg, gammas=grid(0.5, 1.5, 5), frame="bms")
    assert cut.column("skipped").sum() == 0
    with pytest.raises(ValidationError):
        run_wtd(cfg, taus=[0.0], frame="both")


def test_sweep_parallel_equals_serial_and_is_deterministic():
    spec = SweepSpec("gamma_x", 0.0, 2.0, 21, RunConfig(h=1.0),
                     ("omega", "occupation_mode", "magnetization", "w_ee"))
    serial = run_sweep(spec)
    parallel = run_sweep(spec, workers=3)
    assert np.array_equal(serial.rows, parallel.rows, equal_nan=True)
    assert serial.stamped().payload() == run_sweep(spec).stamped().payload()
    assert serial.column("skipped")[10] == 1
    temp = run_sweep(SweepSpec("temperature", 0.1, 2.0, 5, RunConfig(h=1.0), ("occupation_diag",)))
    assert np.all(np.diff(temp.column("occupation_diag_polaron")) > 0)
    with pytest.raises(ValidationError):
        SweepSpec("eta", 0, 1, 5, RunConfig(h=1.0))
    with pytest.raises(ValidationError):
        SweepSpec("tau", 0, 1, 1, RunConfig(h=1.0))


def test_cli_exit_codes_and_outputs(tmp_path, capsys):
    out = tmp_path / "occ.csv"
    assert main(["occupation", "--h", "1", "--gamma-range", "0:2:5", "--out", str(out)]) == 0
    t = ResultTable.from_csv(out.read_text())
    assert t.metadata["units"].startswith("energies")
    assert t.rows.shape == (5, 8)
    assert main(["occupation", "--gamma-range", "0:2:5"]) == 1
    assert main(["occupation", "--h", "-1"]) == 1
    assert main(["occupation", "--h", "1", "--frame", "sideways"]) == 1
    assert main(["spectrum", "--h", "1", "--n-spins", "10", "--k", "20"]) == 1
    assert main(["wtd", "--h", "1", "--mode", "trajectory", "--n-jumps", "100"]) == 2
    cfg = tmp_path / "run.cfg"
    cfg.write_text("h = 1\ngamma_x = 0.3\nseed = 4\n")
    traj = tmp_path / "t.bin"
    assert main(["trajectory", "--config", str(cfg), "--n-jumps", "50", "--format", "binary",
                 "--out", str(traj)]) == 0
    from lmgpolaron.waiting import JumpRecord
    assert JumpRecord.from_binary(traj).seed == 4
    capsys.readouterr()
    assert main(["sweep", "--config", str(cfg), "--range", "0:1:3", "--format", "json"]) == 0
    a = ResultTable.from_json(capsys.readouterr().out)
    assert main(["sweep", "--config", str(cfg), "--range", "0:1:3", "--format", "json",
                 "--workers", "2"]) == 0
    b = ResultTable.from_json(capsys.readouterr().out)
    assert a.payload() == b.payload()
    # every row can be re-run from the emitted metadata
    rerun = tmp_path / "rerun.cfg"
    keys = ("h", "gamma_x", "n_spins", "eta", "omega_c", "beta", "frame", "density", "seed")
    rerun.write_text("".join(f"{k} = {a.metadata[k]}\n" for k in keys))
    assert parse_config(rerun) == parse_config(cfg)
