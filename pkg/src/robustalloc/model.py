"""Market primitives: Vasicek short rate, bond duration, and the admissible
parameter bands with their endogenous bond-premium bounds.

Premium convention
------------------
``lambda_B`` (and ``lambda0_B``) are premium *factors*: the bond's
instantaneous excess return over cash is ``duration(kappa, T_bar - t) *
lambda_B``.  The calibration recovers the factor in the same units, so no
conversion happens anywhere downstream.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Band membership tolerance.  Bounds are treated as closed intervals.
BAND_TOL = 1e-12


def duration(kappa: float, tau):
    """Bond duration ``(1 - exp(-kappa * tau)) / kappa``.

    Maps short-rate volatility to zero-coupon-bond volatility for time to
    maturity ``tau``.  Strictly increasing in ``tau`` and bounded above by
    ``1 / kappa``.  Accepts a scalar or ndarray ``tau``.

    ``kappa`` must be strictly positive: the ``kappa -> 0`` limit is not
    supported because the premium bounds and the calibration divide by
    ``kappa``.
    """
    if kappa <= 0.0:
        raise ValueError("kappa must be positive (kappa -> 0 limit unsupported)")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0.0):
        raise ValueError("tau must be nonnegative (time past maturity?)")
    out = (1.0 - np.exp(-kappa * tau_arr)) / kappa
    return float(out) if out.ndim == 0 else out


def duration_slope(kappa: float, tau):
    """Derivative of :func:`duration` with respect to ``tau``: ``exp(-kappa*tau)``."""
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0.0):
        raise ValueError("tau must be nonnegative")
    out = np.exp(-kappa * tau_arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ReferenceScenario:
    """Constant no-ambiguity parameter combination.

    Parameters
    ----------
    kappa : float
        Mean-reversion speed of the short rate (1/year).
    r_bar : float
        Mean-reversion level (rate/year).
    sigma_r : float
        Short-rate volatility (1/sqrt(year)).
    lambda0_B : float
        Initial bond-premium factor (see module docstring for units).
    lambda_S : float
        Stock risk premium (rate/year).
    sigma_S : float
        Stock volatility (1/sqrt(year)).
    rho : float
        Correlation between short-rate and stock shocks, in (-1, 1).
    """

    kappa: float
    r_bar: float
    sigma_r: float
    lambda0_B: float
    lambda_S: float
    sigma_S: float
    rho: float

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.sigma_r > 0.0:
            raise ValueError(f"sigma_r must be positive, got {self.sigma_r}")
        if not self.sigma_S > 0.0:
            raise ValueError(f"sigma_S must be positive, got {self.sigma_S}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if not self.lambda0_B > 0.0:
            raise ValueError(f"lambda0_B must be positive, got {self.lambda0_B}")
        if not self.lambda_S > 0.0:
            raise ValueError(f"lambda_S must be positive, got {self.lambda_S}")

    def scenario_point(self) -> "ScenarioPoint":
        """The constant scenario induced by the reference parameters."""
        return ScenarioPoint(
            lambda_B=self.lambda0_B,
            lambda_S=self.lambda_S,
            sigma_r=self.sigma_r,
            sigma_S=self.sigma_S,
            rho=self.rho,
        )


@dataclass(frozen=True)
class AmbiguityBands:
    """Extreme values of the ambiguous quantities.

    The bond-premium bounds are derived from ``lambda0_B`` and the short-rate
    volatility interval via :func:`bond_premium_bounds`; they are not stored.
    The lower correlation bound must be nonpositive.  (A negative upper bound
    is accepted so that bands can collapse exactly onto a negatively
    correlated reference scenario.)
    """

    lambda0_B: float
    lambda_S_lo: float
    lambda_S_hi: float
    sigma_r_lo: float
    sigma_r_hi: float
    sigma_S_lo: float
    sigma_S_hi: float
    rho_lo: float
    rho_hi: float

    def __post_init__(self):
        if not 0.0 < self.lambda_S_lo <= self.lambda_S_hi:
            raise ValueError("need 0 < lambda_S_lo <= lambda_S_hi")
        if not 0.0 < self.sigma_r_lo <= self.sigma_r_hi:
            raise ValueError("need 0 < sigma_r_lo <= sigma_r_hi")
        if not 0.0 < self.sigma_S_lo <= self.sigma_S_hi:
            raise ValueError("need 0 < sigma_S_lo <= sigma_S_hi")
        if not -1.0 < self.rho_lo <= self.rho_hi < 1.0:
            raise ValueError("need -1 < rho_lo <= rho_hi < 1")
        if not self.rho_lo <= 0.0:
            raise ValueError("rho_lo must be nonpositive")
        if not self.lambda0_B > 0.0:
            raise ValueError(f"lambda0_B must be positive, got {self.lambda0_B}")


@dataclass(frozen=True)
class InvestorConfig:
    """Investor preferences, horizon, and initial state.

    ``gamma`` is relative risk aversion; ``gamma = 1`` means logarithmic
    utility (strategies are defined there but the power-utility value
    function is not).  The bond maturity ``T_bar`` must not precede the
    horizon ``T``.
    """

    gamma: float
    T: float
    T_bar: float
    W0: float
    r0: float

    def __post_init__(self):
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not 0.0 < self.T <= self.T_bar:
            raise ValueError(f"need 0 < T <= T_bar, got T={self.T}, T_bar={self.T_bar}")
        if not self.W0 > 0.0:
            raise ValueError(f"W0 must be positive, got {self.W0}")


@dataclass(frozen=True)
class ScenarioPoint:
    """A time-t realization of an ambiguity scenario."""

    lambda_B: float
    lambda_S: float
    sigma_r: float
    sigma_S: float
    rho: float

    def __post_init__(self):
        if not self.sigma_r > 0.0:
            raise ValueError(f"sigma_r must be positive, got {self.sigma_r}")
        if not self.sigma_S > 0.0:
            raise ValueError(f"sigma_S must be positive, got {self.sigma_S}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")


@dataclass(frozen=True)
class StatePoint:
    """A (time, wealth, short rate) state."""

    t: float
    W: float
    r: float

    def __post_init__(self):
        if not self.t >= 0.0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        if not self.W > 0.0:
            raise ValueError(f"W must be positive, got {self.W}")


def bond_premium_bounds(bands: AmbiguityBands, kappa: float, t):
    """Lower and upper bound of the bond-premium factor at time ``t``.

    Both bounds start at ``lambda0_B`` and relax exponentially toward the
    stationary levels ``sigma_r_lo**2 / (2 kappa)`` and
    ``sigma_r_hi**2 / (2 kappa)``.  Accepts scalar or ndarray ``t``;
    returns a ``(lower, upper)`` pair of the same shape.
    """
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("t must be nonnegative")
    decay = np.exp(-2.0 * kappa * t_arr)
    lower = decay * bands.lambda0_B + bands.sigma_r_lo**2 / (2.0 * kappa) * (1.0 - decay)
    upper = decay * bands.lambda0_B + bands.sigma_r_hi**2 / (2.0 * kappa) * (1.0 - decay)
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def scenario_in_bands(
    point: ScenarioPoint,
    bands: AmbiguityBands,
    kappa: float,
    t: float,
    tol: float = BAND_TOL,
) -> bool:
    """Whether ``point`` lies in the time-``t`` section of the scenario space.

    All intervals are closed; each comparison allows an absolute tolerance
    ``tol`` on the bound.
    """
    lam_b_lo, lam_b_hi = bond_premium_bounds(bands, kappa, t)
    checks = (
        (point.lambda_B, lam_b_lo, lam_b_hi),
        (point.lambda_S, bands.lambda_S_lo, bands.lambda_S_hi),
        (point.sigma_r, bands.sigma_r_lo, bands.sigma_r_hi),
        (point.sigma_S, bands.sigma_S_lo, bands.sigma_S_hi),
        (point.rho, bands.rho_lo, bands.rho_hi),
    )
    return all(lo - tol <= v <= hi + tol for v, lo, hi in checks)


def degenerate_bands(reference: ReferenceScenario) -> AmbiguityBands:
    """Bands collapsed onto a reference scenario (requires ``rho <= 0``).

    Useful for no-ambiguity reductions; a positive reference correlation
    cannot form a valid degenerate band because the lower correlation bound
    must be nonpositive.  Use the no-ambiguity strategy functions for
    positively correlated references instead.
    """
    if reference.rho > 0.0:
        raise ValueError("degenerate bands require a reference with rho <= 0")
    return AmbiguityBands(
        lambda0_B=reference.lambda0_B,
        lambda_S_lo=reference.lambda_S,
        lambda_S_hi=reference.lambda_S,
        sigma_r_lo=reference.sigma_r,
        sigma_r_hi=reference.sigma_r,
        sigma_S_lo=reference.sigma_S,
        sigma_S_hi=reference.sigma_S,
        rho_lo=reference.rho,
        rho_hi=reference.rho,
    )
