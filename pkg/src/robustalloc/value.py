"""Exponential-affine value function of the robust allocation problem.

For risk aversion gamma > 1 the value of optimally investing from state
(t, W, r) is

    V(t, W, r) = exp((1 - gamma) * (a0(t) + a1(t) * r)) * W**(1-gamma) / (1-gamma)

with ``a1(t)`` the duration to the horizon and ``a0(t)`` an integral of the
worst-case squared Sharpe structure, the mean-reversion drift, and the
worst-case bond premium against the duration profile.  ``a0`` is computed
by composite Simpson quadrature with the integration range split at the
case-switch times of the worst-case correlation (the integrand is smooth
between switches).

The logarithmic case gamma = 1 shares the same optimal strategy but has a
value function of a different shape, which is not provided here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import AmbiguityBands, InvestorConfig, StatePoint, duration
from .strategy import case_switch_times, worst_case_quantities

_T_TOL = 1e-12


@dataclass(frozen=True)
class ValueFunctionContext:
    """Everything needed to evaluate the value function.

    ``resolution`` is the number of quadrature steps per year (at least
    64).  ``scenario_overrides`` optionally pins coordinates of the
    worst-case scenario to constants; it exists for negative-control
    diagnostics and propagates consistently into ``a0`` and the drift
    checks built on this context.
    """

    config: InvestorConfig
    bands: AmbiguityBands
    kappa: float
    r_bar: float
    resolution: int = 256
    scenario_overrides: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        if self.resolution < 64:
            raise ValueError(f"resolution must be >= 64 steps/year, got {self.resolution}")
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")


def _check_time(ctx: ValueFunctionContext, t: float) -> float:
    if not -_T_TOL <= t <= ctx.config.T + _T_TOL:
        raise ValueError(f"t={t} outside [0, {ctx.config.T}]")
    return min(max(t, 0.0), ctx.config.T)


def a1(ctx: ValueFunctionContext, t: float) -> float:
    """Slope of the value-function exponent in the short rate: b(T - t)."""
    t = _check_time(ctx, t)
    return duration(ctx.kappa, ctx.config.T - t)


def a0_integrand(ctx: ValueFunctionContext, u):
    """Integrand of ``a0`` at times ``u`` (vectorized).

    Worst-case quantities are re-evaluated at every node.  The derivative
    of ``a0`` is the negative of this function, exactly.
    """
    u_arr = np.asarray(u, dtype=float)
    lam_b, lam_s, sig_r, sig_s, rho = worst_case_quantities(
        ctx.bands, ctx.kappa, u_arr, ctx.scenario_overrides
    )
    gamma = ctx.config.gamma
    sharpe_b = lam_b / sig_r
    sharpe_s = lam_s / sig_s
    quad_form = (sharpe_b**2 + 2.0 * rho * sharpe_b * sharpe_s + sharpe_s**2) / (1.0 - rho**2)
    b_t = duration(ctx.kappa, ctx.config.T - u_arr)
    out = (
        0.5 / gamma * quad_form
        + ctx.kappa * ctx.r_bar * b_t
        + (gamma - 1.0) / gamma * lam_b * b_t
        - 0.5 * (gamma - 1.0) / gamma * sig_r**2 * b_t**2
    )
    return float(out) if out.ndim == 0 else out


def a0_prime(ctx: ValueFunctionContext, t: float) -> float:
    """Exact derivative of ``a0`` (the negated integrand, not a difference)."""
    t = _check_time(ctx, t)
    return -float(a0_integrand(ctx, t))


def _simpson(f, lo: float, hi: float, steps_per_year: int) -> float:
    if hi - lo <= 1e-14:
        return 0.0
    n = int(math.ceil((hi - lo) * steps_per_year))
    n = max(n + (n % 2), 2)
    nodes = np.linspace(lo, hi, n + 1)
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float((hi - lo) / (3.0 * n) * np.sum(weights * f(nodes)))


def a0(ctx: ValueFunctionContext, t: float, split_at_case_switches: bool = True) -> float:
    """Offset of the value-function exponent; vanishes at the horizon.

    Composite Simpson quadrature of the integrand over [t, T].  By default
    the range is split at the case-switch times of the worst-case
    correlation so that every piece is smooth; the unsplit quadrature is
    available for diagnostics.
    """
    t = _check_time(ctx, t)
    T = ctx.config.T
    if T - t <= 1e-14:
        return 0.0
    # An overridden correlation is constant, so no case switches remain;
    # other overrides leave the switch times of the max formula unchanged.
    rho_overridden = any(name == "rho" for name, _ in ctx.scenario_overrides)
    cuts = [t]
    if split_at_case_switches and not rho_overridden:
        cuts.extend(s for s in case_switch_times(ctx.bands, ctx.kappa, t, T) if t < s < T)
    cuts.append(T)
    integrand = lambda u: a0_integrand(ctx, u)
    return sum(_simpson(integrand, lo, hi, ctx.resolution) for lo, hi in zip(cuts, cuts[1:]))


def value(ctx: ValueFunctionContext, state: StatePoint) -> float:
    """Value function at a state; strictly negative for gamma > 1.

    Rejects gamma = 1: the logarithmic value function has a different
    shape and is out of scope.
    """
    gamma = ctx.config.gamma
    if gamma == 1.0:
        raise ValueError("log-utility value function is out of scope (gamma = 1)")
    t = _check_time(ctx, state.t)
    exponent = (1.0 - gamma) * (a0(ctx, t) + a1(ctx, t) * state.r)
    return math.exp(exponent) * state.W ** (1.0 - gamma) / (1.0 - gamma)
