"""Closed-form optimal allocation under ambiguity and its decomposition.

The optimal bond/stock weights split into a speculative (myopic) vector
evaluated at the worst-case scenario and a bond-only duration hedge:

    total = (1/gamma) * myopic + ((gamma-1)/gamma) * hedge

The worst-case scenario pairs the lowest admissible premia with the highest
admissible volatilities; the worst-case correlation is the largest of the
lower correlation bound and the two negated Sharpe-ratio quotients, which
also classifies the speculative position (both assets, bond hedge-only, or
no stock).  The no-ambiguity strategy evaluates the same formulas at a fixed
reference scenario.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (
    AmbiguityBands,
    InvestorConfig,
    ReferenceScenario,
    ScenarioPoint,
    bond_premium_bounds,
    duration,
)


class SpeculativeCase(Enum):
    """Which candidate attains the worst-case correlation at a given time."""

    BOTH_ASSETS = "both_assets"
    NO_BOND_SPECULATION = "no_bond_speculation"
    NO_STOCK_INVESTMENT = "no_stock_investment"


class AmbiguitySource(Enum):
    """A single ambiguous quantity, for one-source-at-a-time comparisons."""

    SIGMA_R = "sigma_r"
    LAMBDA_S = "lambda_S"
    SIGMA_S = "sigma_S"
    RHO = "rho"


@dataclass(frozen=True)
class PortfolioWeights:
    """Fractions of wealth in the bond and the stock; cash is the remainder.

    No sign or leverage restriction, but both entries must be finite.
    """

    pi_B: float
    pi_S: float

    def __post_init__(self):
        if not (math.isfinite(self.pi_B) and math.isfinite(self.pi_S)):
            raise ValueError(f"weights must be finite, got ({self.pi_B}, {self.pi_S})")

    @property
    def cash(self) -> float:
        return 1.0 - self.pi_B - self.pi_S

    def as_array(self) -> np.ndarray:
        return np.array([self.pi_B, self.pi_S])


@dataclass(frozen=True)
class WorstCaseCorrelation:
    """Worst-case correlation, the attaining case, and all three candidates.

    ``candidates`` holds (lower correlation bound, negated bond/stock
    Sharpe quotient, negated stock/bond Sharpe quotient).
    """

    rho: float
    case: SpeculativeCase
    candidates: tuple[float, float, float]


@dataclass(frozen=True)
class StrategyDecomposition:
    """Total weights plus the myopic/hedge split.

    ``myopic`` is the speculative vector before the 1/gamma weighting and
    ``hedge`` the duration hedge before its (gamma-1)/gamma weighting, so

        total = (1/gamma) * myopic + ((gamma-1)/gamma) * hedge.

    ``ambiguity_hedge`` is the raw difference between a worst-case myopic
    vector and a reference myopic vector (again before 1/gamma); it is zero
    for the no-ambiguity strategy and ``None`` when no reference scenario
    was involved.  ``case`` is ``None`` when the weights were evaluated at
    an explicitly supplied scenario rather than a worst case.
    """

    gamma: float
    myopic: PortfolioWeights
    hedge: PortfolioWeights
    total: PortfolioWeights
    case: SpeculativeCase | None = None
    ambiguity_hedge: PortfolioWeights | None = None


def worst_case_correlation(bands: AmbiguityBands, kappa: float, t: float) -> WorstCaseCorrelation:
    """Worst-case correlation at time ``t`` and the speculative case.

    The result is the maximum of the lower correlation bound and the two
    negated quotients of the worst-case Sharpe ratios, hence lies in
    (-1, 0].  Ties are classified as BOTH_ASSETS because the weight
    formulas agree at a tie.
    """
    lam_b_lo, _ = bond_premium_bounds(bands, kappa, t)
    sharpe_bond = lam_b_lo / bands.sigma_r_hi
    sharpe_stock = bands.lambda_S_lo / bands.sigma_S_hi
    cand_bond = -sharpe_bond / sharpe_stock
    cand_stock = -sharpe_stock / sharpe_bond
    rho = max(bands.rho_lo, cand_bond, cand_stock)
    if rho == bands.rho_lo:
        case = SpeculativeCase.BOTH_ASSETS
    elif rho == cand_bond:
        case = SpeculativeCase.NO_BOND_SPECULATION
    else:
        case = SpeculativeCase.NO_STOCK_INVESTMENT
    return WorstCaseCorrelation(rho=rho, case=case, candidates=(bands.rho_lo, cand_bond, cand_stock))


def worst_case_scenario(bands: AmbiguityBands, kappa: float, t: float) -> ScenarioPoint:
    """The scenario attaining the worst case at time ``t``.

    Lowest admissible premia, highest admissible volatilities, and the
    worst-case correlation.
    """
    lam_b_lo, _ = bond_premium_bounds(bands, kappa, t)
    wcc = worst_case_correlation(bands, kappa, t)
    return ScenarioPoint(
        lambda_B=lam_b_lo,
        lambda_S=bands.lambda_S_lo,
        sigma_r=bands.sigma_r_hi,
        sigma_S=bands.sigma_S_hi,
        rho=wcc.rho,
    )


def worst_case_quantities(bands: AmbiguityBands, kappa: float, t, overrides=()):
    """Vectorized worst-case coordinates at times ``t``.

    Returns arrays ``(lambda_B, lambda_S, sigma_r, sigma_S, rho)`` matching
    the shape of ``t``.  ``overrides`` is a sequence of ``(name, value)``
    pairs replacing individual coordinates of the final worst-case scenario
    with constants (a diagnostic hook for negative controls); the
    worst-case correlation itself is still computed from the band extremes
    unless ``rho`` is overridden.
    """
    t_arr = np.asarray(t, dtype=float)
    lam_b_lo, _ = bond_premium_bounds(bands, kappa, t_arr)
    lam_b = np.broadcast_to(np.asarray(lam_b_lo, dtype=float), t_arr.shape).copy()
    lam_s = np.full(t_arr.shape, bands.lambda_S_lo)
    sig_r = np.full(t_arr.shape, bands.sigma_r_hi)
    sig_s = np.full(t_arr.shape, bands.sigma_S_hi)
    sharpe_bond = lam_b / bands.sigma_r_hi
    sharpe_stock = bands.lambda_S_lo / bands.sigma_S_hi
    rho = np.maximum(
        bands.rho_lo,
        np.maximum(-sharpe_bond / sharpe_stock, -sharpe_stock / sharpe_bond),
    )
    coords = {"lambda_B": lam_b, "lambda_S": lam_s, "sigma_r": sig_r, "sigma_S": sig_s, "rho": rho}
    for name, value in overrides:
        if name not in coords:
            raise ValueError(f"unknown scenario coordinate {name!r}")
        coords[name] = np.full(t_arr.shape, float(value))
    return (coords["lambda_B"], coords["lambda_S"], coords["sigma_r"], coords["sigma_S"], coords["rho"])


def _hedge_weights(config: InvestorConfig, kappa: float, t: float) -> PortfolioWeights:
    """Duration hedge vector; independent of the ambiguity bands."""
    return PortfolioWeights(
        pi_B=duration(kappa, config.T - t) / duration(kappa, config.T_bar - t),
        pi_S=0.0,
    )


def _myopic_weights(point: ScenarioPoint, kappa: float, T_bar: float, t: float) -> PortfolioWeights:
    """Speculative vector at a given scenario (before the 1/gamma weighting)."""
    b_bar = duration(kappa, T_bar - t)
    sharpe_bond = point.lambda_B / point.sigma_r
    sharpe_stock = point.lambda_S / point.sigma_S
    scale = 1.0 / (1.0 - point.rho**2)
    return PortfolioWeights(
        pi_B=scale / (b_bar * point.sigma_r) * (sharpe_bond + point.rho * sharpe_stock),
        pi_S=scale / point.sigma_S * (sharpe_stock + point.rho * sharpe_bond),
    )


def scenario_weights(
    config: InvestorConfig,
    point: ScenarioPoint,
    kappa: float,
    t: float,
    case: SpeculativeCase | None = None,
) -> StrategyDecomposition:
    """Myopic/hedge decomposition evaluated at an explicit scenario point."""
    if not -1e-12 <= t <= config.T + 1e-12:
        raise ValueError(f"t={t} outside the investment horizon [0, {config.T}]")
    t = min(max(t, 0.0), config.T)
    gamma = config.gamma
    myopic = _myopic_weights(point, kappa, config.T_bar, t)
    hedge = _hedge_weights(config, kappa, t)
    total = PortfolioWeights(
        pi_B=myopic.pi_B / gamma + (gamma - 1.0) / gamma * hedge.pi_B,
        pi_S=myopic.pi_S / gamma,
    )
    return StrategyDecomposition(gamma=gamma, myopic=myopic, hedge=hedge, total=total, case=case)


def optimal_weights(
    config: InvestorConfig, bands: AmbiguityBands, kappa: float, t: float
) -> StrategyDecomposition:
    """Optimal ambiguity-averse weights at time ``t`` with decomposition.

    Under NO_BOND_SPECULATION the myopic bond weight vanishes (the bond is
    held for hedging only); under NO_STOCK_INVESTMENT the stock weight
    vanishes.
    """
    wcc = worst_case_correlation(bands, kappa, t)
    point = worst_case_scenario(bands, kappa, t)
    return scenario_weights(config, point, kappa, t, case=wcc.case)


def no_ambiguity_weights(
    config: InvestorConfig, reference: ReferenceScenario, t: float
) -> StrategyDecomposition:
    """Optimal weights of an investor who trusts the reference scenario.

    Same formulas as :func:`optimal_weights` but with the constant
    reference scenario in place of the worst case; the ambiguity hedge is
    identically zero.
    """
    decomp = scenario_weights(config, reference.scenario_point(), reference.kappa, t)
    return StrategyDecomposition(
        gamma=decomp.gamma,
        myopic=decomp.myopic,
        hedge=decomp.hedge,
        total=decomp.total,
        case=None,
        ambiguity_hedge=PortfolioWeights(0.0, 0.0),
    )


def ambiguity_hedge(
    config: InvestorConfig,
    bands: AmbiguityBands,
    reference: ReferenceScenario,
    kappa: float,
    t: float,
) -> PortfolioWeights:
    """The 1/gamma-weighted gap between worst-case and reference myopic vectors.

    Adding the result to the no-ambiguity total reproduces the
    ambiguity-averse total exactly.
    """
    worst = _myopic_weights(worst_case_scenario(bands, kappa, t), kappa, config.T_bar, t)
    ref = _myopic_weights(reference.scenario_point(), reference.kappa, config.T_bar, t)
    return PortfolioWeights(
        pi_B=(worst.pi_B - ref.pi_B) / config.gamma,
        pi_S=(worst.pi_S - ref.pi_S) / config.gamma,
    )


def single_source_weights(
    config: InvestorConfig,
    bands: AmbiguityBands,
    reference: ReferenceScenario,
    source: AmbiguitySource,
    kappa: float,
    t: float,
) -> StrategyDecomposition:
    """Optimal weights when only one quantity is treated as ambiguous.

    The selected source keeps its band from ``bands``; every other
    coordinate is held at its reference value.  The worst-case correlation
    is the usual maximum over the lower correlation bound and the negated
    Sharpe quotients, where a positively correlated reference enters as-is
    (the negated quotients are negative, so the maximum reduces to the
    reference correlation, which is exactly the no-ambiguity treatment of
    that coordinate).
    """
    if source is AmbiguitySource.SIGMA_R:
        sub = AmbiguityBands(
            lambda0_B=reference.lambda0_B,
            lambda_S_lo=reference.lambda_S,
            lambda_S_hi=reference.lambda_S,
            sigma_r_lo=bands.sigma_r_lo,
            sigma_r_hi=bands.sigma_r_hi,
            sigma_S_lo=reference.sigma_S,
            sigma_S_hi=reference.sigma_S,
            rho_lo=min(reference.rho, 0.0),
            rho_hi=reference.rho,
        )
    elif source is AmbiguitySource.LAMBDA_S:
        sub = AmbiguityBands(
            lambda0_B=reference.lambda0_B,
            lambda_S_lo=bands.lambda_S_lo,
            lambda_S_hi=bands.lambda_S_hi,
            sigma_r_lo=reference.sigma_r,
            sigma_r_hi=reference.sigma_r,
            sigma_S_lo=reference.sigma_S,
            sigma_S_hi=reference.sigma_S,
            rho_lo=min(reference.rho, 0.0),
            rho_hi=reference.rho,
        )
    elif source is AmbiguitySource.SIGMA_S:
        sub = AmbiguityBands(
            lambda0_B=reference.lambda0_B,
            lambda_S_lo=reference.lambda_S,
            lambda_S_hi=reference.lambda_S,
            sigma_r_lo=reference.sigma_r,
            sigma_r_hi=reference.sigma_r,
            sigma_S_lo=bands.sigma_S_lo,
            sigma_S_hi=bands.sigma_S_hi,
            rho_lo=min(reference.rho, 0.0),
            rho_hi=reference.rho,
        )
    elif source is AmbiguitySource.RHO:
        sub = AmbiguityBands(
            lambda0_B=reference.lambda0_B,
            lambda_S_lo=reference.lambda_S,
            lambda_S_hi=reference.lambda_S,
            sigma_r_lo=reference.sigma_r,
            sigma_r_hi=reference.sigma_r,
            sigma_S_lo=reference.sigma_S,
            sigma_S_hi=reference.sigma_S,
            rho_lo=bands.rho_lo,
            rho_hi=bands.rho_hi,
        )
    else:
        raise ValueError(f"unknown ambiguity source {source!r}")

    lam_b_lo, _ = bond_premium_bounds(sub, kappa, t)
    sharpe_bond = lam_b_lo / sub.sigma_r_hi
    sharpe_stock = sub.lambda_S_lo / sub.sigma_S_hi
    cand_bond = -sharpe_bond / sharpe_stock
    cand_stock = -sharpe_stock / sharpe_bond
    # Positive reference correlations cannot form a degenerate band; feeding
    # the reference value into the max directly is equivalent because both
    # quotient candidates are negative.
    rho_floor = sub.rho_hi if source is not AmbiguitySource.RHO else sub.rho_lo
    rho = max(rho_floor, cand_bond, cand_stock)
    if rho == rho_floor:
        case = SpeculativeCase.BOTH_ASSETS
    elif rho == cand_bond:
        case = SpeculativeCase.NO_BOND_SPECULATION
    else:
        case = SpeculativeCase.NO_STOCK_INVESTMENT
    point = ScenarioPoint(
        lambda_B=lam_b_lo,
        lambda_S=sub.lambda_S_lo,
        sigma_r=sub.sigma_r_hi,
        sigma_S=sub.sigma_S_hi,
        rho=rho,
    )
    return scenario_weights(config, point, kappa, t, case=case)


def case_switch_times(
    bands: AmbiguityBands,
    kappa: float,
    t_start: float,
    t_end: float,
    scan_per_year: int = 512,
    tol: float = 1e-10,
) -> list[float]:
    """Times in ``(t_start, t_end)`` where the speculative case changes.

    Scans a uniform grid and bisects each detected label change down to
    ``tol`` years.  The worst-case correlation is continuous but only
    piecewise smooth; quadratures split at these times.
    """
    if t_end <= t_start:
        return []
    n = max(int(math.ceil((t_end - t_start) * scan_per_year)), 2)
    grid = np.linspace(t_start, t_end, n + 1)
    labels = [worst_case_correlation(bands, kappa, float(u)).case for u in grid]
    switches = []
    for i in range(n):
        if labels[i + 1] is labels[i]:
            continue
        lo, hi = float(grid[i]), float(grid[i + 1])
        left = labels[i]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if worst_case_correlation(bands, kappa, mid).case is left:
                lo = mid
            else:
                hi = mid
        switches.append(0.5 * (lo + hi))
    return switches
