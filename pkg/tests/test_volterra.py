import cmath
import math

import numpy as np
import pytest

from qedvolterra import KernelEvaluator, ModelParams, SolverError, TimeGrid, \
    compute_Z, estimate_order, hydrogen_density, make_kernel, solve_ide, \
    solve_integral_form


def const_kernel(value=1.0):
    return KernelEvaluator(None, stationary=True, label="const",
                           tau_fn=lambda lag: complex(value))


def exp_kernel(rate=1.0):
    return KernelEvaluator(None, stationary=True, label="exp",
                           tau_fn=lambda lag: cmath.exp(-rate * abs(lag))
                           if lag >= 0 else cmath.exp(-rate * abs(lag)))


def exp_kernel_reference(alpha, omega, times):
    """Closed form for S(tau) = e^{-tau}: the IDE reduces to the ODE
    c'' - (i omega - 1) c' + alpha c = 0, c(0) = 1, c'(0) = 0."""
    b = 1j * omega - 1.0
    disc = cmath.sqrt(b * b - 4.0 * alpha)
    rp, rm = 0.5 * (b + disc), 0.5 * (b - disc)
    t = np.asarray(times)
    return (rp * np.exp(rm * t) - rm * np.exp(rp * t)) / (rp - rm)


def test_time_grid():
    grid = TimeGrid(dt=0.5, n_steps=4)
    np.testing.assert_allclose(grid.times, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert grid.t_max == 2.0
    with pytest.raises(ValueError):
        TimeGrid(dt=0.0, n_steps=3)
    with pytest.raises(ValueError):
        TimeGrid(dt=0.1, n_steps=0)


@pytest.mark.parametrize("method", ["trapezoid", "gregory4"])
def test_decoupled_limit_is_exact(method):
    grid = TimeGrid(dt=0.1, n_steps=50)
    series = solve_ide(const_kernel(), ModelParams(alpha=0.0, omega=2.0),
                       grid, method)
    assert np.all(series.values == 1.0)


@pytest.mark.parametrize("method,tol", [("trapezoid", 1e-4),
                                        ("gregory4", 1e-8)])
def test_constant_kernel_cosine(method, tol):
    # S == 1, omega = 0: c(t) = cos(sqrt(alpha) t)
    alpha = 0.25
    grid = TimeGrid(dt=1e-2, n_steps=1000)
    series = solve_ide(const_kernel(), ModelParams(alpha=alpha, omega=0.0),
                       grid, method)
    exact = np.cos(math.sqrt(alpha) * grid.times)
    assert np.max(np.abs(series.values - exact)) < tol


@pytest.mark.parametrize("method,tol", [("trapezoid", 2e-6),
                                        ("gregory4", 1e-10)])
def test_exponential_kernel_closed_form(method, tol):
    alpha, omega = 0.1, 0.5
    grid = TimeGrid(dt=5e-3, n_steps=2000)
    series = solve_ide(exp_kernel(), ModelParams(alpha=alpha, omega=omega),
                       grid, method)
    exact = exp_kernel_reference(alpha, omega, grid.times)
    assert np.max(np.abs(series.values - exact)) < tol


def test_convergence_orders():
    alpha, omega = 0.1, 0.5
    params = ModelParams(alpha=alpha, omega=omega)
    grid = TimeGrid(dt=0.02, n_steps=500)
    ref = lambda t: exp_kernel_reference(alpha, omega, t)
    est2 = estimate_order(exp_kernel(), params, grid, "trapezoid", ref)
    assert est2.conclusive and est2.order == pytest.approx(2.0, abs=0.2)
    est4 = estimate_order(exp_kernel(), params, grid, "gregory4", ref)
    assert est4.conclusive and est4.order == pytest.approx(4.0, abs=0.5)


def test_estimate_order_without_reference():
    params = ModelParams(alpha=0.1, omega=0.5)
    grid = TimeGrid(dt=0.02, n_steps=500)
    est = estimate_order(exp_kernel(), params, grid, "trapezoid")
    assert est.conclusive and est.order == pytest.approx(2.0, abs=0.3)


def test_step_size_refusal():
    kernel = const_kernel(1.0e6)
    with pytest.raises(SolverError, match="dt"):
        solve_ide(kernel, ModelParams(alpha=1.0, omega=0.0),
                  TimeGrid(dt=1.0, n_steps=5), "trapezoid")


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_ide(const_kernel(), ModelParams(alpha=0.1, omega=0.0),
                  TimeGrid(dt=0.1, n_steps=5), "simpson")


def test_compute_z_exponential_kernel():
    # Z(tau) = alpha (e^{(i omega - 1) tau} - 1) / (i omega - 1)
    alpha, omega = 0.3, 0.7
    grid = TimeGrid(dt=1e-3, n_steps=4000)
    z = compute_Z(exp_kernel(), ModelParams(alpha=alpha, omega=omega), grid)
    b = 1j * omega - 1.0
    exact = alpha * (np.exp(b * grid.times) - 1.0) / b
    assert z.values[0] == 0.0
    assert np.max(np.abs(z.values - exact)) < 1e-7


def test_compute_z_rejects_nonstationary():
    rho = hydrogen_density(1.0)
    from qedvolterra import SqueezeParams, hydrogen_chi
    sq = SqueezeParams(r=0.2, q=np.array([1.0, 0.0, 0.0]),
                       d=np.array([0.0, 0.0, 1.0]))
    kernel = make_kernel("squeezed_concentrated", density=rho, squeeze=sq,
                         chi=hydrogen_chi(1.0))
    with pytest.raises(ValueError):
        compute_Z(kernel, ModelParams(alpha=0.1, omega=0.1),
                  TimeGrid(dt=0.1, n_steps=4))


def test_integral_form_matches_ide():
    alpha, omega = 0.1, 0.5
    params = ModelParams(alpha=alpha, omega=omega)
    grid = TimeGrid(dt=5e-3, n_steps=2000)
    kernel = exp_kernel()
    ide = solve_ide(kernel, params, grid, "trapezoid")
    z = compute_Z(kernel, params, grid)
    integral = solve_integral_form(z, grid)
    assert np.max(np.abs(integral.values - ide.values)) < 1e-6


def test_integral_form_grid_mismatch():
    params = ModelParams(alpha=0.1, omega=0.5)
    grid = TimeGrid(dt=0.01, n_steps=100)
    z = compute_Z(exp_kernel(), params, grid)
    with pytest.raises(ValueError):
        solve_integral_form(z, TimeGrid(dt=0.01, n_steps=50))


def test_vacuum_solve_unitarity_and_decay():
    alpha = 0.5
    params = ModelParams(alpha=alpha, omega=0.375 * alpha**2)
    rho = hydrogen_density(alpha)
    kernel = make_kernel("vacuum", density=rho)
    grid = TimeGrid(dt=0.1, n_steps=800)
    series = solve_ide(kernel, params, grid, "gregory4")
    assert np.max(np.abs(series.values)) <= 1.0 + 10.0 * grid.dt**2
    assert series.abs2[-1] < series.abs2[0]


def test_methods_agree_on_vacuum_kernel():
    alpha = 0.5
    params = ModelParams(alpha=alpha, omega=0.375 * alpha**2)
    kernel = make_kernel("vacuum", density=hydrogen_density(alpha))
    grid = TimeGrid(dt=0.05, n_steps=400)
    a = solve_ide(kernel, params, grid, "trapezoid")
    b = solve_ide(kernel, params, grid, "gregory4")
    assert np.max(np.abs(a.values - b.values)) < 1e-5


def test_series_metadata():
    grid = TimeGrid(dt=0.1, n_steps=10)
    series = solve_ide(const_kernel(), ModelParams(alpha=0.2, omega=0.0),
                       grid, "trapezoid")
    assert series.method == "trapezoid"
    assert series.alpha == 0.2
    assert series.kernel_label == "const"
    np.testing.assert_allclose(series.abs2, np.abs(series.values) ** 2)
