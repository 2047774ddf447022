import math
import os
import subprocess

import numpy as np
import pytest

import tsbsde

MINIMAL = "[timescale]\nscale = 0..1, 3, 4, 5\n[run]\ndelta = 0.25\n"


def test_time_scale_operators():
    ts = tsbsde.TimeScale("0..1, 3, 4, 5")
    assert ts.horizon == 5.0
    assert ts.contains(0.5) and not ts.contains(2.0)
    assert ts.sigma(1.0) == 3.0
    assert ts.rho(3.0) == 1.0
    assert ts.nu(3.0) == 2.0
    assert ts.nabla_measure(0.0, 4.0) == pytest.approx(4.0, abs=1e-12)
    assert ts.exp_beta(1.0, 5.0) == pytest.approx(12 * math.e, rel=1e-12)
    assert str(ts) == "0..1, 3, 4, 5"


def test_partition_and_paths():
    grid = tsbsde.partition(tsbsde.TimeScale("0..1, 3"), 0.5)
    assert grid.times() == [0.0, 0.5, 1.0, 3.0]
    assert grid.nu() == [0.0, 0.5, 0.5, 2.0]
    assert grid.resolves_scale
    w = tsbsde.sample_bm(grid, 2, 1000, 5)
    assert w.shape == (1000, 4, 2)
    assert np.all(w[:, 0, :] == 0.0)
    again = tsbsde.sample_bm(grid, 2, 1000, 5)
    assert np.array_equal(w, again)


def test_run_solve_and_scenario_round_trip():
    out = tsbsde.run("solve", MINIMAL)
    assert set(out) == {"solution.csv", "diagnostics.json"}
    rows = tsbsde.read_csv(out["solution.csv"])
    assert rows[-1]["t"] == 5.0
    assert rows[0]["Y_mean"] == pytest.approx(0.0, abs=1e-10)
    canonical = tsbsde.canonical_scenario(MINIMAL)
    assert tsbsde.canonical_scenario(canonical) == canonical


def test_validation_errors_raise():
    with pytest.raises(tsbsde.ValidationError):
        tsbsde.run("solve", "[timescale]\nscale = 3, 0..1\n[run]\ndelta = 1\n")


def test_reference_value():
    assert tsbsde.gaussian_linear_reference(0.0, 0.0, 1.0, 2.0, "constant") == pytest.approx(2.0)


def run_cli(tmp_path, text, *args):
    cli = os.environ.get("TSBSDE_CLI")
    if not cli:
        pytest.skip("TSBSDE_CLI not set")
    scenario = tmp_path / "s.ini"
    scenario.write_text(text)
    return subprocess.run([cli, *args, "--scenario", str(scenario), "--out", str(tmp_path / "out")],
                          capture_output=True, text=True)


def test_cli_success(tmp_path):
    result = run_cli(tmp_path, MINIMAL, "solve")
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "out" / "solution.csv").exists()


def test_cli_malformed_scale_exits_2(tmp_path):
    result = run_cli(tmp_path, "[timescale]\nscale = 3, 0..1\n[run]\ndelta = 1\n", "solve")
    assert result.returncode == 2


def test_cli_short_sweep_exits_2(tmp_path):
    result = run_cli(tmp_path, MINIMAL + "[sweep]\ndeltas = 0.5\n", "sweep")
    assert result.returncode == 2
