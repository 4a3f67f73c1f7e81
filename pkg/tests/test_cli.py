import subprocess
import sys

import numpy as np
import pytest

from qedvolterra import ModelParams, TimeGrid, hydrogen_density, \
    make_kernel, solve_ide
from qedvolterra.cli import ConfigError, DecayFit, RunConfig, build_config, \
    fit_decay, parse_config_file


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "qedvolterra", *args],
                          capture_output=True, text=True, cwd=cwd)


def read_summary(path):
    out = {}
    for line in path.read_text().splitlines():
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


# ---------------------------------------------------------------- config


def test_parse_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0.25   # coupling\n"
                   "\n"
                   "method = gregory4\n"
                   "sweep_values = 0.1, 0.2\n"
                   "force = true\n")
    values = parse_config_file(str(cfg))
    assert values == {"alpha": 0.25, "method": "gregory4",
                      "sweep_values": (0.1, 0.2), "force": True}


def test_parse_config_rejects_garbage(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("alpha 0.25\n")
    with pytest.raises(ConfigError):
        parse_config_file(str(cfg))


def test_flags_override_file_values():
    cfg = build_config({"alpha": 0.1, "dt": 0.5}, {"alpha": 0.2, "out": None})
    assert cfg.alpha == 0.2
    assert cfg.dt == 0.5


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        build_config({"alhpa": 0.1}, {})


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(mode="simulate").validate()
    with pytest.raises(ConfigError):
        RunConfig(dt=-0.1).validate()
    with pytest.raises(ConfigError):
        RunConfig(dt=1.0, tmax=0.5).validate()
    with pytest.raises(ConfigError):
        RunConfig(transition="custom").validate()
    with pytest.raises(ConfigError):
        RunConfig(state="custom").validate()
    with pytest.raises(ConfigError):
        RunConfig(mode="sweep").validate()


# ---------------------------------------------------------------- fitting


def _decaying_series(gamma=0.02, dt=0.1, n=2000):
    grid = TimeGrid(dt=dt, n_steps=n)
    values = np.exp(-0.5 * gamma * grid.times) \
        * np.exp(-1j * 0.3 * grid.times)
    from qedvolterra import AmplitudeSeries
    return AmplitudeSeries(grid=grid, values=values)


def test_fit_decay_recovers_rate():
    series = _decaying_series(gamma=0.02)
    fit = fit_decay(series, (40.0, 180.0))
    assert isinstance(fit, DecayFit)
    assert fit.gamma_fit == pytest.approx(0.02, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)


def test_fit_decay_window_validation():
    series = _decaying_series()
    with pytest.raises(ValueError):
        fit_decay(series, (150.0, 250.0))
    with pytest.raises(ValueError):
        fit_decay(series, (10.0, 10.05))


# ---------------------------------------------------------------- CLI runs


def test_solve_csv_contract(tmp_path):
    out = tmp_path / "c.csv"
    res = run_cli("solve", "--alpha", "0.25", "--dt", "0.05", "--tmax", "5",
                  "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "t,re_c,im_c,abs2_c"
    assert len(lines) == 102  # header + 101 grid points
    first = lines[1].split(",")
    assert first == ["0.0000000000000000e+00", "1.0000000000000000e+00",
                     "0.0000000000000000e+00", "1.0000000000000000e+00"]
    # every float in 17-significant-digit scientific notation
    for tok in lines[37].split(","):
        assert "e" in tok and len(tok.split("e")[0].replace("-", "")) == 18


def test_solve_is_deterministic(tmp_path):
    args = ("solve", "--alpha", "0.3", "--dt", "0.05", "--tmax", "4")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(*args, "--out", str(a)).returncode == 0
    assert run_cli(*args, "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_matches_library(tmp_path):
    out = tmp_path / "c.csv"
    res = run_cli("solve", "--alpha", "0.5", "--dt", "0.1", "--tmax", "10",
                  "--method", "gregory4", "--out", str(out))
    assert res.returncode == 0, res.stderr
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    params = ModelParams(alpha=0.5, omega=0.375 * 0.25)
    kernel = make_kernel("vacuum", density=hydrogen_density(0.5))
    series = solve_ide(kernel, params, TimeGrid(dt=0.1, n_steps=100),
                       "gregory4")
    np.testing.assert_allclose(data[:, 1] + 1j * data[:, 2], series.values,
                               atol=1e-12)


def test_physical_alpha_solve_refused(tmp_path):
    res = run_cli("solve", "--out", str(tmp_path / "c.csv"))
    assert res.returncode == 2
    assert "--force" in res.stderr


def test_rates_summary_keys(tmp_path):
    out = tmp_path / "rates.txt"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0.3\ndt = 0.1\ntmax = 120\n")
    res = run_cli("rates", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    summary = read_summary(out)
    for key in ("gamma_markov", "gamma_pole", "pole_re", "pole_im",
                "lamb_shift", "residual", "gamma_fit", "fit_r_squared"):
        assert key in summary
    assert float(summary["gamma_pole"]) \
        == pytest.approx(-2.0 * float(summary["pole_re"]))


def test_rates_at_physical_alpha_skips_fit(tmp_path):
    out = tmp_path / "rates.txt"
    res = run_cli("rates", "--out", str(out))
    assert res.returncode == 0, res.stderr
    summary = read_summary(out)
    assert "gamma_markov" in summary
    assert "gamma_fit" not in summary


def test_sweep_ordered_table(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("sweep_values = 0.3, 0.1, 0.2\n")
    res = run_cli("sweep", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = out.read_text().splitlines()
    assert lines[0].startswith("alpha,gamma_markov,gamma_pole")
    alphas = [float(line.split(",")[0]) for line in lines[1:]]
    assert alphas == [0.3, 0.1, 0.2]  # axis order, not completion order


def test_kernel_mode(tmp_path):
    out = tmp_path / "kernel.csv"
    res = run_cli("kernel", "--alpha", "0.5", "--dt", "0.1", "--tmax", "5",
                  "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "tau,re_S,im_S"
    assert len(lines) == 52


def test_custom_density_via_table(tmp_path):
    p = np.linspace(0.0, 30.0, 400)
    table = tmp_path / "rho.txt"
    np.savetxt(table, np.column_stack([p, p * np.exp(-p)]))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"state = custom\nrho_table = {table}\n"
                   "rho_tail_order = 6\ntransition = custom\nomega = 1.0\n"
                   "alpha = 0.01\ndt = 0.05\ntmax = 50\n")
    out = tmp_path / "c.csv"
    res = run_cli("solve", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    # Markov prediction: |c|^2 = exp(-2 pi alpha rho(omega) t)
    gamma = 2.0 * np.pi * 0.01 * np.exp(-1.0)
    assert data[-1, 3] == pytest.approx(np.exp(-gamma * 50.0), rel=0.05)


def test_missing_config_file_is_config_error(tmp_path):
    res = run_cli("solve", "--config", str(tmp_path / "absent.cfg"))
    assert res.returncode == 2


def test_unknown_config_key_is_config_error(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alhpa = 0.1\n")
    res = run_cli("solve", "--config", str(cfg))
    assert res.returncode == 2
    assert "alhpa" in res.stderr


def test_numerical_failure_exit_code(tmp_path):
    # an absurd dt trips the solver's diagonal-weight refusal -> exit 3
    p = np.linspace(0.0, 2.0, 50)
    table = tmp_path / "rho.txt"
    np.savetxt(table, np.column_stack([p, 1e6 * np.exp(-p)]))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"state = custom\nrho_table = {table}\n"
                   "rho_tail_order = 4\ntransition = custom\nomega = 0.5\n"
                   "alpha = 1.0\ndt = 1.0\ntmax = 5\n")
    res = run_cli("solve", "--config", str(cfg),
                  "--out", str(tmp_path / "c.csv"))
    assert res.returncode == 3
    assert "dt" in res.stderr
