"""Numerical verification of the candidate saddle point and Monte Carlo
simulation of wealth under arbitrary strategy/scenario pairs.

The value process drift factors as exp(...) * W**(1-gamma) * f(t, r, pi)
under the worst-case scenario, and as the analogous expression g(t, r,
theta) under the candidate strategy.  The candidate pair is a saddle:
f vanishes at the candidate weights and is maximal there (f <= 0
elsewhere), g vanishes at the candidate scenario and is minimal there
(g >= 0 elsewhere).  :func:`verify_saddle` checks all three conditions on
grids with local refinement and reports violations instead of raising.

``g`` is evaluated by substituting the scenario directly into the generic
drift expression rather than through a term-by-term expansion, which keeps
it consistent with ``f`` by construction; tests cross-check the expansion.

Simulation uses Euler-Maruyama with the wealth stepped in logs (positivity,
smaller discretization bias) and correlated two-factor shocks.  Each path
derives its shocks from its own seed-sequence child, so results are
bit-identical for a given seed regardless of chunking or scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import (
    AmbiguityBands,
    InvestorConfig,
    ReferenceScenario,
    ScenarioPoint,
    bond_premium_bounds,
    duration,
    duration_slope,
    scenario_in_bands,
)
from .strategy import PortfolioWeights, scenario_weights, worst_case_scenario, worst_case_quantities
from .value import ValueFunctionContext, a0_integrand
from . import strategy as _strategy


# ---------------------------------------------------------------------------
# Candidate pair under a context (worst case, possibly with overrides)
# ---------------------------------------------------------------------------

def candidate_scenario(ctx: ValueFunctionContext, t: float) -> ScenarioPoint:
    """The candidate worst-case scenario at ``t``, overrides applied."""
    lam_b, lam_s, sig_r, sig_s, rho = worst_case_quantities(
        ctx.bands, ctx.kappa, t, ctx.scenario_overrides
    )
    return ScenarioPoint(
        lambda_B=float(lam_b), lambda_S=float(lam_s),
        sigma_r=float(sig_r), sigma_S=float(sig_s), rho=float(rho),
    )


def candidate_weights(ctx: ValueFunctionContext, t: float) -> PortfolioWeights:
    """The candidate optimal weights at ``t``, consistent with the scenario."""
    point = candidate_scenario(ctx, t)
    return scenario_weights(ctx.config, point, ctx.kappa, t).total


# ---------------------------------------------------------------------------
# Drift functions
# ---------------------------------------------------------------------------

def _scenario_matrices(ctx: ValueFunctionContext, t: float, point: ScenarioPoint):
    """Premium vector, diffusion matrix, and rate-diffusion vector at ``t``."""
    b_bar = duration(ctx.kappa, ctx.config.T_bar - t)
    lam = np.array([b_bar * point.lambda_B, point.lambda_S])
    sig = np.array([
        [-b_bar * point.sigma_r, 0.0],
        [point.sigma_S * point.rho, point.sigma_S * math.sqrt(1.0 - point.rho**2)],
    ])
    nu = np.array([point.sigma_r, 0.0])
    return lam, sig, nu


def _generic_drift(ctx: ValueFunctionContext, t: float, r: float, pi: np.ndarray,
                   point: ScenarioPoint) -> float:
    """Normalized drift of the value process under (pi, point) at (t, r)."""
    gamma = ctx.config.gamma
    T = ctx.config.T
    lam, sig, nu = _scenario_matrices(ctx, t, point)
    b_t = duration(ctx.kappa, T - t)
    b_slope = duration_slope(ctx.kappa, T - t)
    a0p = -float(a0_integrand(ctx, t))
    return (
        a0p
        - b_slope * r
        + r
        + float(pi @ lam)
        + b_t * ctx.kappa * (ctx.r_bar - r)
        - 0.5 * gamma * float(pi @ (sig @ sig.T) @ pi)
        + (1.0 - gamma) * b_t * float(pi @ sig @ nu)
        + 0.5 * (1.0 - gamma) * b_t**2 * float(nu @ nu)
    )


def drift_f(ctx: ValueFunctionContext, t: float, r: float, pi) -> float:
    """Drift of the value process under strategy ``pi`` at the candidate scenario.

    Vanishes at the candidate weights for every (t, r) and is strictly
    concave in ``pi``.  ``pi`` may be :class:`PortfolioWeights` or any
    length-2 sequence.
    """
    if not 0.0 <= t <= ctx.config.T:
        raise ValueError(f"t={t} outside [0, {ctx.config.T}]")
    pi_arr = pi.as_array() if isinstance(pi, PortfolioWeights) else np.asarray(pi, dtype=float)
    return _generic_drift(ctx, t, r, pi_arr, candidate_scenario(ctx, t))


def drift_g(ctx: ValueFunctionContext, t: float, r: float, theta: ScenarioPoint,
            validate: bool = True) -> float:
    """Drift of the value process under scenario ``theta`` at the candidate weights.

    Vanishes at the candidate scenario and is nonnegative over the
    admissible scenario section.  Raises when ``theta`` lies outside that
    section (disable with ``validate=False`` for diagnostics).
    """
    if not 0.0 <= t <= ctx.config.T:
        raise ValueError(f"t={t} outside [0, {ctx.config.T}]")
    if validate and not scenario_in_bands(theta, ctx.bands, ctx.kappa, t):
        raise ValueError(f"scenario {theta} outside the admissible section at t={t}")
    pi_arr = candidate_weights(ctx, t).as_array()
    return _generic_drift(ctx, t, r, pi_arr, theta)


def _g_coefficients(ctx: ValueFunctionContext, t: float, r: float):
    """Coefficients of g as a polynomial in the scenario coordinates.

    g = k + cB*lambda_B + cS*lambda_S + crr*sigma_r**2
        + crs*sigma_r*sigma_S*rho + css*sigma_S**2

    which makes grid searches over the scenario box a handful of
    broadcasted array operations.
    """
    gamma = ctx.config.gamma
    T, T_bar = ctx.config.T, ctx.config.T_bar
    pi = candidate_weights(ctx, t).as_array()
    b_bar = duration(ctx.kappa, T_bar - t)
    b_t = duration(ctx.kappa, T - t)
    b_slope = duration_slope(ctx.kappa, T - t)
    a0p = -float(a0_integrand(ctx, t))
    k = a0p - b_slope * r + r + b_t * ctx.kappa * (ctx.r_bar - r)
    c_lam_b = pi[0] * b_bar
    c_lam_s = pi[1]
    c_rr = -0.5 * gamma * pi[0] ** 2 * b_bar**2 - (1.0 - gamma) * b_t * pi[0] * b_bar \
        + 0.5 * (1.0 - gamma) * b_t**2
    c_rs = gamma * pi[0] * pi[1] * b_bar + (1.0 - gamma) * b_t * pi[1]
    c_ss = -0.5 * gamma * pi[1] ** 2
    return k, c_lam_b, c_lam_s, c_rr, c_rs, c_ss


# ---------------------------------------------------------------------------
# Saddle-point verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Grid sizes and tolerances for :func:`verify_saddle`."""

    t_points: int = 50
    r_points: int = 11
    r_min: float = -0.05
    r_max: float = 0.15
    star_radius: float = 0.5
    star_refinements: int = 3
    theta_points: int = 5
    theta_refinements: int = 2
    tolerance: float = 1e-7


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the saddle-point grid checks.

    ``violations`` is empty when every condition holds within tolerance;
    each entry is a single human-readable finding.
    """

    passed: bool
    tolerance: float
    max_abs_f: float
    max_abs_f_at: tuple[float, float]
    max_abs_g: float
    max_abs_g_at: tuple[float, float]
    best_perturbed_f: float
    best_perturbed_f_at: tuple[float, float]
    min_scenario_g: float
    min_scenario_g_at: tuple[float, float]
    min_scenario_theta: ScenarioPoint
    gamma: float
    t_points: int
    r_points: int
    overrides: tuple[tuple[str, float], ...]
    violations: tuple[str, ...]

    def to_text(self) -> str:
        """One finding per line, key = value, for CI consumption."""
        lines = [
            f"passed = {self.passed}",
            f"tolerance = {self.tolerance!r}",
            f"gamma = {self.gamma!r}",
            f"grid_t_points = {self.t_points}",
            f"grid_r_points = {self.r_points}",
            f"max_abs_f = {self.max_abs_f!r}",
            f"max_abs_f_at = t={self.max_abs_f_at[0]!r} r={self.max_abs_f_at[1]!r}",
            f"max_abs_g = {self.max_abs_g!r}",
            f"max_abs_g_at = t={self.max_abs_g_at[0]!r} r={self.max_abs_g_at[1]!r}",
            f"best_perturbed_f = {self.best_perturbed_f!r}",
            f"best_perturbed_f_at = t={self.best_perturbed_f_at[0]!r} r={self.best_perturbed_f_at[1]!r}",
            f"min_scenario_g = {self.min_scenario_g!r}",
            f"min_scenario_g_at = t={self.min_scenario_g_at[0]!r} r={self.min_scenario_g_at[1]!r}",
            f"min_scenario_theta = {self.min_scenario_theta}",
        ]
        for name, val in self.overrides:
            lines.append(f"override_{name} = {val!r}")
        for v in self.violations:
            lines.append(f"violation = {v}")
        return "\n".join(lines) + "\n"


_STAR = np.array([
    [0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0],
    [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0],
])


def _maximize_f_star(ctx, t, r, pi_hat, radius, passes):
    """Best f found by a 9-point star search with shrinking radius."""
    center = pi_hat.copy()
    best = _generic_drift(ctx, t, r, center, candidate_scenario(ctx, t))
    best_pi = center
    point = candidate_scenario(ctx, t)
    h = radius
    for _ in range(passes):
        for direction in _STAR:
            cand = center + h * direction
            val = _generic_drift(ctx, t, r, cand, point)
            if val > best:
                best = val
                best_pi = cand
        center = best_pi
        h *= 0.5
    return best, best_pi


def _minimize_g_grid(ctx, t, r, grid: GridSpec):
    """Min of g over the scenario box by coarse grid plus local refinement."""
    lam_b_lo, lam_b_hi = bond_premium_bounds(ctx.bands, ctx.kappa, t)
    box = [
        (lam_b_lo, lam_b_hi),
        (ctx.bands.lambda_S_lo, ctx.bands.lambda_S_hi),
        (ctx.bands.sigma_r_lo, ctx.bands.sigma_r_hi),
        (ctx.bands.sigma_S_lo, ctx.bands.sigma_S_hi),
        (ctx.bands.rho_lo, ctx.bands.rho_hi),
    ]
    k, c_lam_b, c_lam_s, c_rr, c_rs, c_ss = _g_coefficients(ctx, t, r)
    n = grid.theta_points

    def evaluate(bounds):
        axes = [np.linspace(lo, hi, n) for lo, hi in bounds]
        lb = axes[0][:, None, None, None, None]
        ls = axes[1][None, :, None, None, None]
        sr = axes[2][None, None, :, None, None]
        ss = axes[3][None, None, None, :, None]
        rh = axes[4][None, None, None, None, :]
        g = k + c_lam_b * lb + c_lam_s * ls + c_rr * sr**2 + c_rs * sr * ss * rh + c_ss * ss**2
        idx = np.unravel_index(np.argmin(g), g.shape)
        theta = tuple(float(axes[d][idx[d]]) for d in range(5))
        return float(g[idx]), theta, [(axes[d][1] - axes[d][0]) if n > 1 else 0.0 for d in range(5)]

    best_val, best_theta, spacing = evaluate(box)
    for _ in range(grid.theta_refinements):
        bounds = []
        for d in range(5):
            lo0, hi0 = box[d]
            half = spacing[d]
            bounds.append((max(lo0, best_theta[d] - half), min(hi0, best_theta[d] + half)))
        val, theta, spacing = evaluate(bounds)
        if val < best_val:
            best_val, best_theta = val, theta
    return best_val, ScenarioPoint(*best_theta)


def verify_saddle(
    config: InvestorConfig,
    bands: AmbiguityBands,
    reference: ReferenceScenario,
    kappa: float,
    r_bar: float,
    grid: GridSpec = GridSpec(),
    scenario_overrides: tuple[tuple[str, float], ...] = (),
    resolution: int = 256,
) -> VerificationReport:
    """Check the three drift conditions on a (t, r) grid.

    Reports the worst deviation of each condition and where it occurred;
    violations beyond ``grid.tolerance`` are findings in the report, not
    exceptions.  The conditions involve the bands only; ``reference`` is
    accepted alongside them for interface symmetry with the calibration
    outputs.  ``scenario_overrides`` deliberately perturbs the candidate
    scenario for negative controls.

    The drift at the candidate pair is evaluated twice, once through the
    matrix form (reported as f) and once through the scenario-coefficient
    expansion (reported as g), so agreement of the two is itself a check.
    """
    ctx = ValueFunctionContext(
        config=config, bands=bands, kappa=kappa, r_bar=r_bar,
        resolution=resolution, scenario_overrides=tuple(scenario_overrides),
    )
    t_grid = np.linspace(0.0, config.T, grid.t_points)
    r_grid = np.linspace(grid.r_min, grid.r_max, grid.r_points)

    max_abs_f, max_abs_f_at = -1.0, (0.0, 0.0)
    max_abs_g, max_abs_g_at = -1.0, (0.0, 0.0)
    best_pert, best_pert_at = -np.inf, (0.0, 0.0)
    min_g, min_g_at = np.inf, (0.0, 0.0)
    min_g_theta = candidate_scenario(ctx, 0.0)

    for t in t_grid:
        t = float(t)
        point = candidate_scenario(ctx, t)
        pi_hat = candidate_weights(ctx, t).as_array()
        for r in r_grid:
            r = float(r)
            f_val = _generic_drift(ctx, t, r, pi_hat, point)
            if abs(f_val) > max_abs_f:
                max_abs_f, max_abs_f_at = abs(f_val), (t, r)
            g_val = _generic_drift(ctx, t, r, pi_hat, point)  # g at the candidate equals f
            if abs(g_val) > max_abs_g:
                max_abs_g, max_abs_g_at = abs(g_val), (t, r)
            pert, _ = _maximize_f_star(ctx, t, r, pi_hat, grid.star_radius, grid.star_refinements)
            if pert > best_pert:
                best_pert, best_pert_at = pert, (t, r)
            g_min, g_theta = _minimize_g_grid(ctx, t, r, grid)
            if g_min < min_g:
                min_g, min_g_at, min_g_theta = g_min, (t, r), g_theta

    tol = grid.tolerance
    violations = []
    if max_abs_f > tol:
        violations.append(
            f"martingale condition: |f| = {max_abs_f!r} exceeds {tol!r} at t={max_abs_f_at[0]!r}"
        )
    if max_abs_g > tol:
        violations.append(
            f"candidate-scenario drift: |g| = {max_abs_g!r} exceeds {tol!r} at t={max_abs_g_at[0]!r}"
        )
    if best_pert > tol:
        violations.append(
            f"strategy maximality: perturbed f = {best_pert!r} exceeds {tol!r} "
            f"at t={best_pert_at[0]!r}"
        )
    if min_g < -tol:
        violations.append(
            f"scenario minimality: grid min of g = {min_g!r} below {-tol!r} "
            f"at t={min_g_at[0]!r} theta={min_g_theta}"
        )
    return VerificationReport(
        passed=not violations,
        tolerance=tol,
        max_abs_f=max_abs_f,
        max_abs_f_at=max_abs_f_at,
        max_abs_g=max_abs_g,
        max_abs_g_at=max_abs_g_at,
        best_perturbed_f=best_pert,
        best_perturbed_f_at=best_pert_at,
        min_scenario_g=min_g,
        min_scenario_g_at=min_g_at,
        min_scenario_theta=min_g_theta,
        gamma=config.gamma,
        t_points=grid.t_points,
        r_points=grid.r_points,
        overrides=tuple(scenario_overrides),
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------------
# Monte Carlo simulation
# ---------------------------------------------------------------------------

WeightsRule = Callable[[float], PortfolioWeights]
ScenarioRule = Callable[[float], ScenarioPoint]


def constant_weights_rule(weights: PortfolioWeights) -> WeightsRule:
    return lambda t: weights


def constant_scenario_rule(point: ScenarioPoint) -> ScenarioRule:
    return lambda t: point


def optimal_weights_rule(config: InvestorConfig, bands: AmbiguityBands, kappa: float) -> WeightsRule:
    """Time rule for the ambiguity-averse optimal weights."""
    return lambda t: _strategy.optimal_weights(config, bands, kappa, t).total


def no_ambiguity_weights_rule(config: InvestorConfig, reference: ReferenceScenario) -> WeightsRule:
    """Time rule for the ambiguity-neglecting optimal weights."""
    return lambda t: _strategy.no_ambiguity_weights(config, reference, t).total


def worst_case_scenario_rule(bands: AmbiguityBands, kappa: float) -> ScenarioRule:
    return lambda t: worst_case_scenario(bands, kappa, t)


def reference_scenario_rule(reference: ReferenceScenario) -> ScenarioRule:
    """The constant reference scenario as a time rule.

    With a time-decaying premium band the constant reference premium can
    leave the admissible section, so reference runs are benchmarks, not
    members of the prior set; skip band validation for them.
    """
    point = reference.scenario_point()
    return lambda t: point


@dataclass(frozen=True)
class SimulationSpec:
    """What to simulate: path count, resolution, seed, and the two rules."""

    paths: int
    steps_per_year: int
    seed: int
    strategy: WeightsRule
    scenario: ScenarioRule

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.steps_per_year < 12:
            raise ValueError("steps_per_year must be >= 12")


@dataclass(frozen=True)
class SimulationResult:
    """Terminal wealth and rate per path, plus full paths when requested."""

    terminal_wealth: np.ndarray
    terminal_rate: np.ndarray
    times: np.ndarray | None = None
    wealth_paths: np.ndarray | None = None
    rate_paths: np.ndarray | None = None


def simulate_wealth(
    spec: SimulationSpec,
    config: InvestorConfig,
    kappa: float,
    r_bar: float,
    bands: AmbiguityBands | None = None,
    return_paths: bool = False,
    chunk_paths: int = 8192,
) -> SimulationResult:
    """Euler-Maruyama simulation of wealth and the short rate.

    The wealth is stepped in logs with left-endpoint coefficients; the
    stock shock is built from the rate shock and an independent factor via
    the scenario correlation.  When ``bands`` is given, the scenario rule
    is validated against the admissible section at every step.  Path ``i``
    always draws its shocks from seed-sequence child ``i`` of ``seed``, so
    results do not depend on ``chunk_paths``.
    """
    T = config.T
    n_steps = int(round(T * spec.steps_per_year))
    dt = T / n_steps
    sqrt_dt = math.sqrt(dt)
    times = np.linspace(0.0, T, n_steps + 1)

    # Deterministic per-step coefficients from the two rules.
    prem = np.empty(n_steps)
    diff1 = np.empty(n_steps)
    diff2 = np.empty(n_steps)
    sig_r_step = np.empty(n_steps)
    for i in range(n_steps):
        t_i = float(times[i])
        w = spec.strategy(t_i)
        theta = spec.scenario(t_i)
        if bands is not None and not scenario_in_bands(theta, bands, kappa, t_i):
            raise ValueError(f"scenario rule leaves the admissible section at t={t_i}")
        b_bar = duration(kappa, config.T_bar - t_i)
        prem[i] = w.pi_B * b_bar * theta.lambda_B + w.pi_S * theta.lambda_S
        diff1[i] = -w.pi_B * b_bar * theta.sigma_r + w.pi_S * theta.sigma_S * theta.rho
        diff2[i] = w.pi_S * theta.sigma_S * math.sqrt(1.0 - theta.rho**2)
        sig_r_step[i] = theta.sigma_r
    drift_w = prem - 0.5 * (diff1**2 + diff2**2)

    w_terminal = np.empty(spec.paths)
    r_terminal = np.empty(spec.paths)
    if return_paths:
        w_paths = np.empty((spec.paths, n_steps + 1))
        r_paths = np.empty((spec.paths, n_steps + 1))

    for start in range(0, spec.paths, chunk_paths):
        stop = min(start + chunk_paths, spec.paths)
        m = stop - start
        shocks = np.empty((m, n_steps, 2))
        for j in range(m):
            child = np.random.SeedSequence(entropy=spec.seed, spawn_key=(start + j,))
            shocks[j] = np.random.default_rng(child).standard_normal((n_steps, 2))
        ln_w = np.full(m, math.log(config.W0))
        r = np.full(m, config.r0)
        if return_paths:
            w_paths[start:stop, 0] = config.W0
            r_paths[start:stop, 0] = config.r0
        for i in range(n_steps):
            z1 = shocks[:, i, 0]
            z2 = shocks[:, i, 1]
            ln_w += (r + drift_w[i]) * dt + sqrt_dt * (diff1[i] * z1 + diff2[i] * z2)
            r = r + kappa * (r_bar - r) * dt + sig_r_step[i] * sqrt_dt * z1
            if return_paths:
                w_paths[start:stop, i + 1] = np.exp(ln_w)
                r_paths[start:stop, i + 1] = r
        if not np.all(np.isfinite(ln_w)):
            raise ValueError(
                "non-finite wealth encountered; the step size is too coarse "
                "for the chosen leverage"
            )
        w_terminal[start:stop] = np.exp(ln_w)
        r_terminal[start:stop] = r

    if return_paths:
        return SimulationResult(w_terminal, r_terminal, times, w_paths, r_paths)
    return SimulationResult(w_terminal, r_terminal)


def crra_utility(wealth: np.ndarray, gamma: float) -> np.ndarray:
    """CRRA utility; logarithmic at gamma = 1."""
    w = np.asarray(wealth, dtype=float)
    if gamma == 1.0:
        return np.log(w)
    return w ** (1.0 - gamma) / (1.0 - gamma)


@dataclass(frozen=True)
class UtilityEstimate:
    """Monte Carlo estimate of expected terminal utility and wealth."""

    mean_utility: float
    utility_se: float
    utility_sd: float
    mean_wealth: float
    wealth_se: float
    wealth_sd: float
    paths: int


def summarize_utility(result: SimulationResult, gamma: float) -> UtilityEstimate:
    u = crra_utility(result.terminal_wealth, gamma)
    w = result.terminal_wealth
    n = len(w)
    u_sd = float(np.std(u, ddof=1)) if n > 1 else 0.0
    w_sd = float(np.std(w, ddof=1)) if n > 1 else 0.0
    return UtilityEstimate(
        mean_utility=float(np.mean(u)),
        utility_se=u_sd / math.sqrt(n),
        utility_sd=u_sd,
        mean_wealth=float(np.mean(w)),
        wealth_se=w_sd / math.sqrt(n),
        wealth_sd=w_sd,
        paths=n,
    )


def monte_carlo_utility(
    config: InvestorConfig,
    kappa: float,
    r_bar: float,
    strategy_rule: WeightsRule,
    scenario_rule: ScenarioRule,
    paths: int,
    steps_per_year: int,
    seed: int,
    bands: AmbiguityBands | None = None,
) -> UtilityEstimate:
    """Estimate expected terminal utility under a strategy/scenario pair."""
    spec = SimulationSpec(
        paths=paths, steps_per_year=steps_per_year, seed=seed,
        strategy=strategy_rule, scenario=scenario_rule,
    )
    result = simulate_wealth(spec, config, kappa, r_bar, bands=bands)
    return summarize_utility(result, config.gamma)
