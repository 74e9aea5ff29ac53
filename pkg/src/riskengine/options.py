"""Black-Scholes pricing and full-revaluation option return scenarios.

Option positions are revalued scenario by scenario: the underlying moves
to spot*(1+r), time to expiry shrinks by the holding horizon, and the
option return is the repriced value over today's value minus one.  No
delta or delta-gamma shortcut is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .errors import ExpiredWithinHorizon

TRADING_DAYS_PER_YEAR = 252

CALL = "call"
PUT = "put"


@dataclass(frozen=True)
class OptionSpec:
    """European vanilla option; rate and volatility are annualized."""

    underlying_id: str
    kind: str
    strike: float
    expiry_years: float
    rate: float
    vol_annual: float

    def __post_init__(self):
        if self.kind not in (CALL, PUT):
            raise ValueError(f"kind must be 'call' or 'put', got {self.kind!r}")
        if self.strike <= 0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if self.expiry_years <= 0:
            raise ValueError(f"expiry must be positive, got {self.expiry_years}")
        if self.vol_annual < 0:
            raise ValueError(f"volatility must be >= 0, got {self.vol_annual}")


def _bs_value(kind: str, strike: float, expiry: float, rate: float,
              vol: float, spots) -> np.ndarray:
    """Vectorized Black-Scholes value at one or more spot levels.

    Spots <= 0 are treated as a worthless underlying: calls are worth 0
    and puts the discounted strike.
    """
    s = np.asarray(spots, dtype=np.float64)
    disc_k = strike * math.exp(-rate * expiry)
    out = np.empty_like(s)

    dead = s <= 0.0
    if np.any(dead):
        out[dead] = 0.0 if kind == CALL else disc_k

    live = ~dead
    if np.any(live):
        sl = s[live]
        if vol <= 0.0:
            fwd = sl * math.exp(rate * expiry)
            if kind == CALL:
                val = np.maximum(fwd - strike, 0.0) * math.exp(-rate * expiry)
            else:
                val = np.maximum(strike - fwd, 0.0) * math.exp(-rate * expiry)
        else:
            sd = vol * math.sqrt(expiry)
            d1 = (np.log(sl / strike) + (rate + 0.5 * vol * vol) * expiry) / sd
            d2 = d1 - sd
            if kind == CALL:
                val = sl * ndtr(d1) - disc_k * ndtr(d2)
            else:
                val = disc_k * ndtr(-d2) - sl * ndtr(-d1)
        out[live] = val
    return out


def bs_price(spec: OptionSpec, spot: float) -> float:
    """Black-Scholes price of a European call or put."""
    if spot <= 0:
        raise ValueError(f"spot must be positive, got {spot}")
    return float(
        _bs_value(spec.kind, spec.strike, spec.expiry_years, spec.rate,
                  spec.vol_annual, spot)
    )


def option_return_scenarios(spec: OptionSpec, spot: float, underlying_returns,
                            holding_days: int) -> np.ndarray:
    """Simple option returns under each underlying-return scenario.

    Each scenario revalues the option at spot*(1+r) with expiry reduced by
    holding_days/252 (full revaluation); the return is value/value0 - 1.
    An option expiring within the horizon is an error: the caller must
    shorten the horizon rather than receive an intrinsic-value guess.
    """
    if holding_days < 0:
        raise ValueError("holding_days must be >= 0")
    remaining = spec.expiry_years - holding_days / TRADING_DAYS_PER_YEAR
    if remaining <= 0:
        raise ExpiredWithinHorizon(
            f"option expires in {spec.expiry_years:.4f}y, inside the "
            f"{holding_days}-day horizon"
        )
    value0 = bs_price(spec, spot)
    if value0 <= 0:
        raise ValueError("option is worthless at the current spot; returns undefined")
    r = np.asarray(underlying_returns, dtype=np.float64)
    shifted = replace(spec, expiry_years=remaining)
    values = _bs_value(shifted.kind, shifted.strike, shifted.expiry_years,
                       shifted.rate, shifted.vol_annual, spot * (1.0 + r))
    return values / value0 - 1.0


def annualize_vol(sigma_daily: float) -> float:
    """Annualized volatility from a daily standard deviation (252 days/year)."""
    return sigma_daily * math.sqrt(TRADING_DAYS_PER_YEAR)
