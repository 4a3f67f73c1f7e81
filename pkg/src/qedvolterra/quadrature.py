"""Complex-valued adaptive quadrature and semi-infinite oscillatory integrals.

Two entry points:

* :func:`integrate_finite` -- globally adaptive Gauss quadrature on [a, b]
  for complex integrands, with a paired 7/15-point rule for error control.
* :func:`oscillatory_halfline` -- integrals of the form
  integral_0^inf g(p) exp(-i p tau) dp for envelopes with declared decay.
  Small |tau| is handled by truncated adaptive quadrature; otherwise the
  integral is summed half-period by half-period and the alternating tail of
  partial sums is accelerated with an iterated Aitken transformation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

_X7, _W7 = leggauss(7)
_X15, _W15 = leggauss(15)

_AITKEN_LEVELS = 8


class QuadratureError(RuntimeError):
    """Raised when a quadrature fails to converge; carries the best estimate."""

    def __init__(self, message, best_estimate=None, err_est=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.err_est = err_est


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000
    tail_strategy: str = "between_zeros_acceleration"

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 8:
            raise ValueError("max_subdivisions must be >= 8")
        if self.tail_strategy not in ("between_zeros_acceleration",
                                      "truncate_with_bound"):
            raise ValueError(f"unknown tail_strategy {self.tail_strategy!r}")


DEFAULT_QUAD = QuadConfig()


def _pair_estimate(f, a, b):
    """(15-point value, |15-point - 7-point|) on [a, b]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y15 = np.asarray(f(mid + half * _X15), dtype=complex)
    v15 = half * np.dot(_W15, y15)
    y7 = np.asarray(f(mid + half * _X7), dtype=complex)
    v7 = half * np.dot(_W7, y7)
    return v15, abs(v15 - v7)


def integrate_finite(f, a: float, b: float,
                     cfg: QuadConfig = DEFAULT_QUAD) -> tuple[complex, float]:
    """Adaptive quadrature of a complex-valued f on [a, b].

    ``f`` must accept numpy arrays.  Returns (value, error estimate); raises
    :class:`QuadratureError` when the subdivision budget is exhausted before
    the tolerance is met.
    """
    if a == b:
        return 0.0 + 0.0j, 0.0
    val, err = _pair_estimate(f, a, b)
    # heap of (-err, a, b, value, err); refine the worst interval first
    heap = [(-err, a, b, val, err)]
    total_val, total_err = val, err
    n_sub = 1
    while n_sub < cfg.max_subdivisions:
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total_val))
        if total_err <= tol:
            return total_val, total_err
        _, ia, ib, ival, ierr = heapq.heappop(heap)
        mid = 0.5 * (ia + ib)
        v1, e1 = _pair_estimate(f, ia, mid)
        v2, e2 = _pair_estimate(f, mid, ib)
        total_val += (v1 + v2) - ival
        total_err += (e1 + e2) - ierr
        heapq.heappush(heap, (-e1, ia, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, ib, v2, e2))
        n_sub += 1
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(total_val))
    if total_err <= tol:
        return total_val, total_err
    raise QuadratureError(
        f"no convergence after {cfg.max_subdivisions} subdivisions "
        f"(err={total_err:.3e}, tol={tol:.3e})",
        best_estimate=total_val, err_est=total_err)


def _iterated_aitken(s: np.ndarray, levels: int = _AITKEN_LEVELS) -> complex:
    """Iterated Aitken delta-squared acceleration of a partial-sum sequence."""
    s = np.asarray(s, dtype=complex)
    for _ in range(levels):
        if len(s) < 3:
            break
        d2 = s[2:] - 2.0 * s[1:-1] + s[:-2]
        d1 = s[2:] - s[1:-1]
        safe = np.abs(d2) > 1e-300
        nxt = np.where(safe, s[2:] - np.where(safe, d1, 0) ** 2
                       / np.where(safe, d2, 1.0), s[2:])
        if np.any(~safe):
            # sequence already flat; stop accelerating
            s = nxt
            break
        s = nxt
    return complex(s[-1])


def _truncation_point(g, abs_tol, *, decay_order=None, decay_rate=None,
                      peak=0.0, start=None):
    """Point P past which the analytic tail bound of |g| drops below abs_tol."""
    P = start if start is not None else max(8.0 * max(peak, 0.0), 1.0)
    for _ in range(200):
        gP = abs(complex(np.max(np.abs(np.asarray(g(np.array([P])))))))
        if decay_rate is not None:
            bound = gP / decay_rate
        else:
            bound = gP * P / (decay_order - 1.0)
        if bound <= abs_tol:
            return P, bound
        P *= 1.5
    raise QuadratureError("could not find a truncation point for the tail")


def _panel_values(f, edges: np.ndarray) -> np.ndarray:
    """Non-adaptive 15-point Gauss value of f on each [edges[k], edges[k+1]]."""
    a = edges[:-1]
    half = 0.5 * (edges[1:] - a)
    mid = a + half
    nodes = mid[:, None] + half[:, None] * _X15[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=complex).reshape(nodes.shape)
    return half * (vals @ _W15)


def oscillatory_halfline(g, tau: float, cfg: QuadConfig = DEFAULT_QUAD, *,
                         decay_order: float | None = None,
                         decay_rate: float | None = None,
                         peak: float = 0.0) -> complex:
    """integral_0^inf g(p) exp(-i p tau) dp for a decaying envelope g.

    Exactly one decay declaration is required: ``decay_order`` m >= 2 for an
    algebraic tail |g| ~ C/p^m, or ``decay_rate`` for an exponential tail.
    ``peak`` is the location of the envelope maximum (drives the strategy
    switch at |tau| * peak = 2).
    """
    if (decay_order is None) == (decay_rate is None):
        raise ValueError("declare exactly one of decay_order / decay_rate")
    if decay_order is not None and decay_order < 2.0:
        raise ValueError("algebraic decay order must be >= 2")

    abs_tol = cfg.abs_tol
    P, tail_bound = _truncation_point(
        g, 0.1 * abs_tol, decay_order=decay_order, decay_rate=decay_rate,
        peak=peak)

    def integrand(p):
        return np.asarray(g(p), dtype=complex) * np.exp(-1j * tau * p)

    plain = (abs(tau) * max(peak, 0.0) < 2.0
             and abs(tau) * P < 40.0 * math.pi)
    if tau == 0.0 or plain or cfg.tail_strategy == "truncate_with_bound":
        val, err = integrate_finite(integrand, 0.0, P, cfg)
        return val

    # half-period panels; partial sums past the envelope bulk alternate and
    # are accelerated
    h = math.pi / abs(tau)
    bulk_end = max(peak * 2.0, 0.0)
    block = 16
    max_panels = 20000
    partial = 0.0 + 0.0j
    sums: list[complex] = []
    accel_prev = None
    streak = 0
    k = 0
    while k < max_panels:
        edges = np.arange(k, k + block + 1, dtype=float) * h
        vals = _panel_values(integrand, edges)
        for j, v in enumerate(vals):
            partial += v
            if edges[j + 1] > bulk_end:
                sums.append(partial)
        k += block
        if len(sums) >= 8:
            accel = _iterated_aitken(np.array(sums[-48:]))
            if accel_prev is not None:
                tol = max(abs_tol, cfg.rel_tol * abs(accel))
                streak = streak + 1 if abs(accel - accel_prev) < tol else 0
                if streak >= 2:
                    return accel
            accel_prev = accel
        if k * h > P and sums:
            # envelope tail below the truncation bound; direct sum suffices
            return _iterated_aitken(np.array(sums[-48:])) if len(sums) >= 3 \
                else partial
    raise QuadratureError(
        f"oscillatory acceleration did not converge (tau={tau:g})",
        best_estimate=accel_prev if accel_prev is not None else partial)
