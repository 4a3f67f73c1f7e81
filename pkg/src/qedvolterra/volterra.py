"""Time-domain solvers for the excited-state amplitude equation

    dc/dt = -alpha * integral_0^t c(s) exp(i omega (t-s)) S(t, s) ds,
    c(0) = 1,

by implicit product integration: a trapezoid baseline (global O(dt^2)) and a
Gregory-4 / Adams-Moulton scheme (global O(dt^4)) whose starting values come
from Richardson-extrapolated trapezoid sub-steps.  For stationary kernels the
equivalent second-kind integral form c(T) = 1 - integral_0^T Z(T-s) c(s) ds
is also provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .atom import ModelParams
from .kernels import KernelEvaluator

# lower-triangular kernel matrix cache cutoff, bytes
_KERNEL_MATRIX_BUDGET = 2**28

# Gregory end weights of order 4 (error O(h^4)); interior weight is 1
_GREGORY_END = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])

# closed Newton-Cotes weight rows for small interval counts
_NEWTON_COTES = {
    1: np.array([0.5, 0.5]),
    2: np.array([1.0, 4.0, 1.0]) / 3.0,
    3: np.array([3.0, 9.0, 9.0, 3.0]) / 8.0,
    4: np.array([14.0, 64.0, 24.0, 64.0, 14.0]) / 45.0,
    5: np.array([1.0 / 3.0, 4.0 / 3.0, 17.0 / 24.0, 9.0 / 8.0,
                 9.0 / 8.0, 3.0 / 8.0]),
}


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k * dt, k = 0 .. n_steps."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def t_max(self) -> float:
        return self.n_steps * self.dt


@dataclass
class AmplitudeSeries:
    """Excited-state amplitude c(t_k) on a uniform grid."""

    grid: TimeGrid
    values: np.ndarray
    method: str = ""
    kernel_label: str = ""
    alpha: float = 0.0
    omega: float = 0.0
    truncation_error: Optional[np.ndarray] = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def abs2(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass
class ZKernel:
    """Z(tau) = alpha * integral_0^tau S(t, 0) exp(i omega t) dt on a grid."""

    grid: TimeGrid
    values: np.ndarray


@dataclass
class OrderEstimate:
    order: float
    conclusive: bool
    errors: tuple = ()


def _gregory_weights(n: int) -> np.ndarray:
    if n >= 6:
        w = np.ones(n + 1)
        w[:3] = _GREGORY_END
        w[-3:] = _GREGORY_END[::-1]
        return w
    return _NEWTON_COTES[n].copy()


def _check_step(alpha: float, dt: float, s00: complex):
    # the implicit diagonal weight alpha*dt/2*S(t,t) must stay contractive
    if alpha * dt * dt * abs(s00) / 2.0 >= 1.0:
        suggested = math.sqrt(0.5 / (alpha * abs(s00)))
        raise SolverError(
            f"dt={dt:g} too large for this kernel (diagonal weight >= 1); "
            f"use dt < {suggested:.3g}")


def _kernel_rows(kernel: KernelEvaluator, times: np.ndarray):
    """Row accessor row(n) -> S(t_n, t_0..t_n); caches the lower triangle
    when it fits in the memory budget."""
    n = len(times) - 1
    if (n + 1) ** 2 * 16 <= _KERNEL_MATRIX_BUDGET:
        mat = np.empty((n + 1, n + 1), dtype=complex)
        filled = np.zeros(n + 1, dtype=bool)

        def row(k):
            if not filled[k]:
                mat[k, :k + 1] = kernel.row(times[k], times[:k + 1])
                filled[k] = True
            return mat[k, :k + 1]
    else:
        def row(k):
            return kernel.row(times[k], times[:k + 1])
    return row


def _solve_trapezoid(kernel, params, grid) -> np.ndarray:
    alpha, omega = params.alpha, params.omega
    dt = grid.dt
    n = grid.n_steps
    times = grid.times
    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    if alpha == 0.0:
        c[:] = 1.0
        return c

    if kernel.stationary:
        W = kernel.tau_values(times) * np.exp(1j * omega * times)
        _check_step(alpha, dt, W[0])
        denom = 1.0 + 0.25 * alpha * dt * dt * W[0]
        phi_prev = 0.0 + 0.0j
        for k in range(1, n + 1):
            conv = 0.5 * c[0] * W[k]
            if k > 1:
                conv += np.dot(c[1:k], W[k - 1:0:-1])
            phik = -alpha * dt * conv
            c[k] = (c[k - 1] + 0.5 * dt * (phi_prev + phik)) / denom
            phi_prev = phik - 0.5 * alpha * dt * W[0] * c[k]
        return c

    row = _kernel_rows(kernel, times)
    phase = np.exp(1j * omega * times)  # e^{i omega (t_n - t_j)} = ph[n-j]
    s00 = kernel.eval(0.0, 0.0)
    _check_step(alpha, dt, s00)
    phi_prev = 0.0 + 0.0j
    for k in range(1, n + 1):
        K = row(k) * phase[k::-1]
        conv = 0.5 * c[0] * K[0] + np.dot(c[1:k], K[1:k])
        phik = -alpha * dt * conv
        denom = 1.0 + 0.25 * alpha * dt * dt * K[k]
        c[k] = (c[k - 1] + 0.5 * dt * (phi_prev + phik)) / denom
        phi_prev = phik - 0.5 * alpha * dt * K[k] * c[k]
    return c


def _subgrid_params(grid: TimeGrid, n_start: int, refine: int) -> TimeGrid:
    return TimeGrid(dt=grid.dt / refine, n_steps=n_start * refine)


def _gregory_phi(c, W, k, alpha, dt, *, exclude_last=False):
    """phi_k = -alpha*dt * sum_j w_j c_j W_{k-j}, Gregory/Newton-Cotes weights.

    With ``exclude_last`` the j=k term is left out (implicit handling).
    """
    w = _gregory_weights(k)
    v = c[:k + 1] * W[k::-1]
    stop = k if exclude_last else k + 1
    return -alpha * dt * np.dot(w[:stop], v[:stop])


def _solve_gregory4_stationary(kernel, params, grid) -> np.ndarray:
    alpha, omega = params.alpha, params.omega
    dt = grid.dt
    n = grid.n_steps
    times = grid.times
    W = kernel.tau_values(times) * np.exp(1j * omega * times)
    _check_step(alpha, dt, W[0])

    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    n_start = min(7, n)

    # starting values: Richardson-extrapolated trapezoid (even-power error)
    coarse = _solve_trapezoid(kernel, params, _subgrid_params(grid, n_start, 1))
    half = _solve_trapezoid(kernel, params, _subgrid_params(grid, n_start, 2))
    quarter = _solve_trapezoid(kernel, params,
                               _subgrid_params(grid, n_start, 4))
    r1 = (4.0 * half[::2] - coarse) / 3.0
    r2 = (4.0 * quarter[::2] - half) / 3.0
    c[:n_start + 1] = (16.0 * r2[::2] - r1) / 15.0
    c[0] = 1.0
    if n <= 7:
        return c

    phi_hist = {k: _gregory_phi(c, W, k, alpha, dt) for k in range(4, 8)}
    denom = 1.0 + alpha * dt * dt * (9.0 / 24.0) * (3.0 / 8.0) * W[0]
    for k in range(8, n + 1):
        v0 = c[0] * W[k]
        v1 = c[1] * W[k - 1]
        v2 = c[2] * W[k - 2]
        vn2 = c[k - 2] * W[2]
        vn1 = c[k - 1] * W[1]
        base = np.dot(c[:k], W[k:0:-1])
        conv = base + (3.0 / 8.0 - 1.0) * v0 + (7.0 / 6.0 - 1.0) * (v1 + vn1) \
            + (23.0 / 24.0 - 1.0) * (v2 + vn2)
        phi_known = -alpha * dt * conv
        rhs = c[k - 1] + dt / 24.0 * (9.0 * phi_known + 19.0 * phi_hist[k - 1]
                                      - 5.0 * phi_hist[k - 2]
                                      + phi_hist[k - 3])
        c[k] = rhs / denom
        phi_hist[k] = phi_known - alpha * dt * (3.0 / 8.0) * W[0] * c[k]
        phi_hist.pop(k - 3, None)
    return c


def _solve_gregory4_general(kernel, params, grid) -> np.ndarray:
    alpha, omega = params.alpha, params.omega
    dt = grid.dt
    n = grid.n_steps
    times = grid.times
    row = _kernel_rows(kernel, times)
    phase = np.exp(1j * omega * times)
    s00 = kernel.eval(0.0, 0.0)
    _check_step(alpha, dt, s00)

    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    n_start = min(7, n)
    coarse = _solve_trapezoid(kernel, params, _subgrid_params(grid, n_start, 1))
    half = _solve_trapezoid(kernel, params, _subgrid_params(grid, n_start, 2))
    quarter = _solve_trapezoid(kernel, params,
                               _subgrid_params(grid, n_start, 4))
    r1 = (4.0 * half[::2] - coarse) / 3.0
    r2 = (4.0 * quarter[::2] - half) / 3.0
    c[:n_start + 1] = (16.0 * r2[::2] - r1) / 15.0
    c[0] = 1.0
    if n <= 7:
        return c

    def phi_at(k, exclude_last=False):
        K = row(k) * phase[k::-1]
        w = _gregory_weights(k)
        stop = k if exclude_last else k + 1
        return -alpha * dt * np.dot(w[:stop], (c[:k + 1] * K)[:stop])

    phi_hist = {k: phi_at(k) for k in range(4, 8)}
    for k in range(8, n + 1):
        K = row(k) * phase[k::-1]
        phi_known = -alpha * dt * np.dot(_gregory_weights(k)[:k],
                                         c[:k] * K[:k])
        denom = 1.0 + alpha * dt * dt * (9.0 / 24.0) * (3.0 / 8.0) * K[k]
        rhs = c[k - 1] + dt / 24.0 * (9.0 * phi_known + 19.0 * phi_hist[k - 1]
                                      - 5.0 * phi_hist[k - 2]
                                      + phi_hist[k - 3])
        c[k] = rhs / denom
        phi_hist[k] = phi_known - alpha * dt * (3.0 / 8.0) * K[k] * c[k]
        phi_hist.pop(k - 3, None)
    return c


def solve_ide(kernel: KernelEvaluator, params: ModelParams, grid: TimeGrid,
              method: str = "trapezoid") -> AmplitudeSeries:
    """Solve the amplitude equation; global error O(dt^2) ('trapezoid') or
    O(dt^4) ('gregory4')."""
    if method not in ("trapezoid", "gregory4"):
        raise ValueError(f"unknown method {method!r}")
    if params.alpha == 0.0:
        # decoupled limit: exact, no kernel evaluations needed
        return AmplitudeSeries(grid=grid,
                               values=np.ones(grid.n_steps + 1, dtype=complex),
                               method=method, kernel_label=kernel.label,
                               alpha=0.0, omega=params.omega)
    if method == "trapezoid":
        c = _solve_trapezoid(kernel, params, grid)
    elif method == "gregory4":
        if kernel.stationary:
            c = _solve_gregory4_stationary(kernel, params, grid)
        else:
            c = _solve_gregory4_general(kernel, params, grid)
    else:
        raise ValueError(f"unknown method {method!r}")
    return AmplitudeSeries(grid=grid, values=c, method=method,
                           kernel_label=kernel.label,
                           alpha=params.alpha, omega=params.omega)


def compute_Z(kernel: KernelEvaluator, params: ModelParams,
              grid: TimeGrid) -> ZKernel:
    """Cumulative trapezoid of alpha * S(t, 0) exp(i omega t); Z(0) = 0."""
    if not kernel.stationary:
        raise ValueError("Z kernel requires a stationary kernel")
    times = grid.times
    integrand = params.alpha * kernel.tau_values(times) \
        * np.exp(1j * params.omega * times)
    z = cumulative_trapezoid(integrand, dx=grid.dt, initial=0.0)
    return ZKernel(grid=grid, values=z)


def solve_integral_form(z: ZKernel, grid: TimeGrid) -> AmplitudeSeries:
    """Trapezoid product integration of c(T) = 1 - int_0^T Z(T-s) c(s) ds.

    Explicit in c(t_n) because Z(0) = 0.
    """
    if z.grid != grid:
        raise ValueError("Z kernel grid does not match the solver grid")
    dt = grid.dt
    n = grid.n_steps
    Z = z.values
    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    for k in range(1, n + 1):
        conv = 0.5 * c[0] * Z[k]
        if k > 1:
            conv += np.dot(c[1:k], Z[k - 1:0:-1])
        c[k] = 1.0 - dt * conv
    return AmplitudeSeries(grid=grid, values=c, method="integral_trapezoid",
                           kernel_label="Z")


def estimate_order(kernel: KernelEvaluator, params: ModelParams,
                   grid: TimeGrid, method: str,
                   reference: Optional[Callable[[np.ndarray], np.ndarray]]
                   = None) -> OrderEstimate:
    """Empirical convergence order from solves at dt, dt/2, dt/4.

    ``reference`` maps times to exact amplitudes; without it the dt/4
    solution serves as the Richardson reference for the coarser two.
    """
    grids = [TimeGrid(grid.dt / r, grid.n_steps * r) for r in (1, 2, 4)]
    sols = [solve_ide(kernel, params, g, method).values for g in grids]
    times = grid.times
    if reference is not None:
        exact = np.asarray(reference(times), dtype=complex)
        errs = [np.max(np.abs(sols[0] - exact)),
                np.max(np.abs(sols[1][::2] - exact)),
                np.max(np.abs(sols[2][::4] - exact))]
        if max(errs) < 1e-13:
            return OrderEstimate(math.nan, False, tuple(errs))
        orders = [math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])]
        return OrderEstimate(float(np.mean(orders)), True, tuple(errs))
    ref = sols[2][::4]
    errs = [np.max(np.abs(sols[0] - ref)), np.max(np.abs(sols[1][::2] - ref))]
    if max(errs) < 1e-13:
        return OrderEstimate(math.nan, False, tuple(errs))
    # with the dt/4 solution as reference, err(dt)/err(dt/2) = 2^p + 1
    # exactly for a clean order-p error; invert that instead of the naive
    # log2 of the ratio
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.nan
    if not ratio > 1.0:
        return OrderEstimate(math.nan, False, tuple(errs))
    return OrderEstimate(math.log2(ratio - 1.0), True, tuple(errs))
