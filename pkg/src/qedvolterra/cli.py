"""Command-line front end: kernel dumps, time-domain solves, rate analysis
and parameter sweeps with deterministic CSV / summary output.

Configuration is a flat ``key = value`` text file; command-line flags
override file values.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .atom import ModelParams, SmearingFunction, hydrogen_chi, \
    transition_frequency
from .kernels import SpectralDensity, SqueezeParams, density_from_table, \
    hydrogen_density, make_kernel
from .laplace import MissingExtensionError, analyze, markov_rate
from .quadrature import QuadConfig, QuadratureError
from .units import FINE_STRUCTURE
from .volterra import AmplitudeSeries, SolverError, TimeGrid, solve_ide

_MODES = ("kernel", "solve", "rates", "sweep")
_STATES = ("vacuum", "squeezed_concentrated", "squeezed_general", "custom")
_TRANSITIONS = ("hydrogen_2p1s", "custom")

SUMMARY_KEYS = ("gamma_markov", "gamma_pole", "pole_re", "pole_im",
                "lamb_shift", "residual")

# largest grid a solve may request without --force; physical-alpha hydrogen
# needs ~1e13 steps (decay time 1/gamma ~ alpha^-5 vs kernel memory ~ 1/alpha)
_MAX_SOLVE_STEPS = 200_000


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "solve"
    state: str = "vacuum"
    alpha: float = FINE_STRUCTURE
    transition: str = "hydrogen_2p1s"
    omega: Optional[float] = None        # required for transition=custom
    rho_table: Optional[str] = None      # two-column (p, rho) text table
    rho_tail_order: float = 4.0
    chi_table: Optional[str] = None      # four-column (p, chi_x, chi_y, chi_z)
    r: float = 0.0
    q: tuple = (0.0, 0.0, 0.0)
    d: tuple = (0.0, 0.0, 1.0)
    amplitude: float = 1.0
    dt: Optional[float] = None
    tmax: Optional[float] = None
    method: str = "trapezoid"
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    fit_window: Optional[tuple] = None   # (t1, t2); default [0.2, 0.9]*tmax
    fit: bool = True
    sweep_axis: str = "alpha"
    sweep_values: tuple = ()
    out: str = "out.csv"
    force: bool = False

    def validate(self):
        if self.mode not in _MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.state not in _STATES:
            raise ConfigError(f"unknown state {self.state!r}")
        if self.transition not in _TRANSITIONS:
            raise ConfigError(f"unknown transition {self.transition!r}")
        if self.method not in ("trapezoid", "gregory4"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.alpha < 0.0:
            raise ConfigError("alpha must be nonnegative")
        if self.dt is not None and self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.dt is not None and self.tmax is not None \
                and self.tmax <= self.dt:
            raise ConfigError("tmax must exceed dt")
        if self.transition == "custom" and self.omega is None:
            raise ConfigError("custom transition requires omega")
        if self.state == "custom" and self.rho_table is None:
            raise ConfigError("custom state requires rho_table")
        if self.mode == "sweep" and not self.sweep_values:
            raise ConfigError("sweep mode requires nonempty sweep_values")


@dataclass
class DecayFit:
    """Least-squares exponential fit of |c(t)|^2 on a window."""

    gamma_fit: float
    intercept: float
    r_squared: float
    window: tuple


def fit_decay(series: AmplitudeSeries, window: tuple) -> DecayFit:
    """Line through (t, log |c|^2); gamma_fit is minus the slope."""
    t1, t2 = window
    t = series.times
    if t1 < t[0] or t2 > t[-1] or t2 <= t1:
        raise ValueError("fit window must lie inside the solved range")
    mask = (t >= t1) & (t <= t2)
    if np.count_nonzero(mask) < 10:
        raise ValueError("fewer than 10 points in the fit window")
    a2 = series.abs2[mask]
    if np.any(a2 <= 0.0):
        raise ValueError("|c| vanishes inside the fit window")
    x = t[mask]
    y = np.log(a2)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0.0 else 0.0
    return DecayFit(gamma_fit=float(-slope), intercept=float(intercept),
                    r_squared=max(min(r2, 1.0), 0.0), window=(t1, t2))


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in raw:
        return tuple(float(tok) for tok in raw.split(","))
    try:
        return int(raw) if raw.lstrip("+-").isdigit() else float(raw)
    except ValueError:
        return raw


def parse_config_file(path: str) -> dict:
    values = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    return values


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    cfg = RunConfig()
    known = set(cfg.__dataclass_fields__)
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    for key, val in merged.items():
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        setattr(cfg, key, val)
    if isinstance(cfg.sweep_values, (int, float)):
        cfg.sweep_values = (float(cfg.sweep_values),)
    if isinstance(cfg.fit_window, (int, float)):
        raise ConfigError("fit_window needs two comma-separated values")
    cfg.validate()
    return cfg


def _load_chi(cfg: RunConfig) -> SmearingFunction:
    if cfg.transition == "hydrogen_2p1s":
        return hydrogen_chi(cfg.alpha)
    if cfg.chi_table is None:
        raise ConfigError("custom transition with a squeezed state "
                          "requires chi_table")
    data = np.loadtxt(cfg.chi_table)
    if data.ndim != 2 or data.shape[1] != 4:
        raise ConfigError("chi_table must have four columns "
                          "(p, chi_x, chi_y, chi_z)")
    from scipy.interpolate import CubicSpline
    spl = CubicSpline(data[:, 0], data[:, 1:], axis=0)

    # table samples chi along the carrier ray; evaluated at |p|
    def fn(p):
        p = np.asarray(p, dtype=float)
        return spl(np.sqrt(np.sum(p * p, axis=-1)))

    return SmearingFunction(fn=fn, label=f"table:{cfg.chi_table}")


def _model(cfg: RunConfig) -> tuple[ModelParams, SpectralDensity]:
    omega = transition_frequency(cfg.alpha) \
        if cfg.transition == "hydrogen_2p1s" else float(cfg.omega)
    params = ModelParams(alpha=cfg.alpha, omega=omega)
    if cfg.state == "custom" or cfg.rho_table is not None:
        density = density_from_table(cfg.rho_table, cfg.rho_tail_order,
                                     label=f"table:{cfg.rho_table}")
    else:
        density = hydrogen_density(cfg.alpha)
    return params, density


def _default_grid(cfg: RunConfig, params: ModelParams,
                  density: SpectralDensity) -> TimeGrid:
    # resolve both the e^{i omega t} phase and the kernel memory width
    dt = cfg.dt
    if dt is None:
        candidates = [0.05 / density.scale * (2.0 / 3.0)]
        if params.omega > 0.0:
            candidates.append(0.05 / params.omega)
        dt = min(candidates)
    tmax = cfg.tmax
    if tmax is None:
        gamma = markov_rate(density, params)
        tmax = 5.0 / gamma if gamma > 0.0 else 1000.0 * dt
    return TimeGrid(dt=dt, n_steps=max(int(round(tmax / dt)), 1))


def _build_kernel(cfg: RunConfig, params, density, grid: Optional[TimeGrid]):
    quad_cfg = QuadConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    tabulate = None
    if grid is not None and grid.n_steps > 4000:
        tabulate = (grid.t_max, max(grid.dt, 0.02 / density.scale))
    squeeze = None
    chi = None
    if cfg.state.startswith("squeezed"):
        squeeze = SqueezeParams(r=cfg.r, q=np.asarray(cfg.q, dtype=float),
                                d=np.asarray(cfg.d, dtype=float),
                                amplitude=cfg.amplitude)
        chi = _load_chi(cfg)
    state = cfg.state if cfg.state != "custom" else "custom"
    return make_kernel(state, density=density, squeeze=squeeze, chi=chi,
                       cfg=quad_cfg, tabulate=tabulate)


def _refuse_oversized(cfg: RunConfig, grid: TimeGrid):
    if grid.n_steps > _MAX_SOLVE_STEPS and not cfg.force:
        raise ConfigError(
            f"solve needs {grid.n_steps} steps (> {_MAX_SOLVE_STEPS}): the "
            "decay time 1/gamma and the kernel resolution dt are separated "
            "by ~1e13 steps at the physical fine-structure constant; pass "
            "--force to insist, or set dt / tmax explicitly")


def _write_series(series: AmplitudeSeries, path: str):
    lines = ["t,re_c,im_c,abs2_c"]
    for t, c in zip(series.times, series.values):
        lines.append(",".join((_fmt(t), _fmt(c.real), _fmt(c.imag),
                               _fmt(abs(c) ** 2))))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_summary(pairs: list[tuple[str, object]], path: str):
    lines = [f"{k} = {_fmt(v) if isinstance(v, float) else v}"
             for k, v in pairs]
    Path(path).write_text("\n".join(lines) + "\n")


def _run_solve(cfg: RunConfig) -> AmplitudeSeries:
    params, density = _model(cfg)
    grid = _default_grid(cfg, params, density)
    _refuse_oversized(cfg, grid)
    kernel = _build_kernel(cfg, params, density, grid)
    return solve_ide(kernel, params, grid, cfg.method)


def _rates_pairs(cfg: RunConfig, with_fit: bool) -> list[tuple[str, object]]:
    params, density = _model(cfg)
    pairs: list[tuple[str, object]] = [("alpha", _fmt(params.alpha)),
                                       ("omega", _fmt(params.omega))]
    gamma_m = markov_rate(density, params)
    try:
        an = analyze(density, params)
        lap = {"gamma_markov": an.gamma_markov, "gamma_pole": an.gamma_pole,
               "pole_re": an.pole.real, "pole_im": an.pole.imag,
               "lamb_shift": an.lamb_shift, "residual": an.residual}
    except MissingExtensionError:
        lap = {"gamma_markov": gamma_m, "gamma_pole": math.nan,
               "pole_re": math.nan, "pole_im": math.nan,
               "lamb_shift": math.nan, "residual": math.nan}
    pairs.extend((k, lap[k]) for k in SUMMARY_KEYS)

    grid = _default_grid(cfg, params, density)
    # skip the time-domain fit when the grid would be desk-scale infeasible
    solvable = grid.n_steps <= _MAX_SOLVE_STEPS or cfg.force
    if with_fit and solvable:
        kernel = _build_kernel(cfg, params, density, grid)
        series = solve_ide(kernel, params, grid, cfg.method)
        window = cfg.fit_window or (0.2 * grid.t_max, 0.9 * grid.t_max)
        fit = fit_decay(series, window)
        pairs.extend([("gamma_fit", fit.gamma_fit),
                      ("fit_intercept", fit.intercept),
                      ("fit_r_squared", fit.r_squared),
                      ("fit_t1", fit.window[0]), ("fit_t2", fit.window[1])])
    return pairs


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the process exit status."""
    cfg.validate()
    if cfg.mode == "solve":
        series = _run_solve(cfg)
        _write_series(series, cfg.out)
        return 0

    if cfg.mode == "kernel":
        params, density = _model(cfg)
        grid = _default_grid(cfg, params, density)
        # point evaluations only; skip the solver's spline tabulation
        kernel = _build_kernel(cfg, params, density, None)
        times = grid.times
        if len(times) > 4096:
            times = times[::len(times) // 4096 + 1]
        if kernel.stationary:
            lines = ["tau,re_S,im_S"]
            for tau in times:
                v = kernel.tau(float(tau))
                lines.append(",".join((_fmt(tau), _fmt(v.real), _fmt(v.imag))))
        else:
            lines = ["t,s,re_S,im_S"]
            sample = times[::max(len(times) // 64, 1)]
            for t in sample:
                for s in sample[sample <= t]:
                    v = kernel.eval(float(t), float(s))
                    lines.append(",".join((_fmt(t), _fmt(s),
                                           _fmt(v.real), _fmt(v.imag))))
        Path(cfg.out).write_text("\n".join(lines) + "\n")
        return 0

    if cfg.mode == "rates":
        if cfg.state.startswith("squeezed"):
            raise ConfigError("rates mode needs a stationary (vacuum/custom) "
                              "state")
        _write_summary(_rates_pairs(cfg, with_fit=cfg.fit), cfg.out)
        return 0

    # sweep: repeat `rates` per axis value (independent jobs), assemble in
    # axis order
    if cfg.sweep_axis != "alpha":
        raise ConfigError("only sweep_axis = alpha is supported")

    def one(value: float) -> str:
        sub = replace(cfg, alpha=float(value), mode="rates")
        pairs = dict(_rates_pairs(sub, with_fit=False))
        return ",".join([_fmt(float(value))]
                        + [_fmt(float(pairs[k])) for k in SUMMARY_KEYS])

    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(one, cfg.sweep_values))
    header = "alpha," + ",".join(SUMMARY_KEYS)
    Path(cfg.out).write_text("\n".join([header] + rows) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qedvolterra",
        description="Spontaneous-emission amplitude dynamics of a two-level "
                    "atom in configurable field states")
    ap.add_argument("mode", choices=_MODES)
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--tmax", type=float)
    ap.add_argument("--state", choices=_STATES)
    ap.add_argument("--method", choices=("trapezoid", "gregory4"))
    ap.add_argument("--out")
    ap.add_argument("--force", action="store_true", default=None)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        flags = {k: getattr(args, k)
                 for k in ("alpha", "dt", "tmax", "state", "method", "out",
                           "force")}
        cfg = build_config(file_values, flags)
        cfg.mode = args.mode
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, SolverError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
