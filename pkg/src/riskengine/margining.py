"""Margining control: margin factors, availability, and trade approval.

The margin factor a = VaR/(h + VaR) is calibrated so that, for a fully
invested account, the probability of the end-of-day marginal availability
dropping below -h*C stays within the tail level.  A proposed trade is
approved when the recomputed availability M = C - a*W is non-negative.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ScenarioUnavailable, UnknownAsset, UnsupportedMethod
from .measures import (
    METHOD_HISTORICAL,
    METHOD_MONTE_CARLO,
    METHOD_NORMAL,
    METHODS,
    EstimationWarning,
    NormalParams,
    _tail,
    var_empirical,
    var_normal,
)
from .options import OptionSpec, option_return_scenarios
from .scenarios import NormalModel, ScenarioSet, sample

VERDICT_ALLOWED = "allowed"
VERDICT_DENIED = "denied"


@dataclass(frozen=True)
class AssetPosition:
    asset_id: str
    amount: float
    leverage: float = 1.0

    def __post_init__(self):
        if self.amount < 0:
            raise ValueError("position amount must be >= 0")
        if self.leverage < 1:
            raise ValueError("leverage factor must be >= 1")

    @property
    def label(self) -> str:
        return self.asset_id


@dataclass(frozen=True)
class OptionPosition:
    spec: OptionSpec
    amount: float

    def __post_init__(self):
        if self.amount < 0:
            raise ValueError("position amount must be >= 0")

    @property
    def label(self) -> str:
        s = self.spec
        return f"{s.underlying_id}.{s.kind}@{s.strike:g}"


Position = AssetPosition | OptionPosition


@dataclass(frozen=True)
class MarginPolicy:
    """Tail level, availability-drop threshold and VaR estimation method."""

    alpha: float
    h: float
    var_method: str = METHOD_NORMAL
    seed: int = 0
    n_scenarios: int = 100_000

    def __post_init__(self):
        _tail(self.alpha)
        if self.h <= 0:
            raise ValueError("h must be positive (h -> 0 degenerates to a -> 1)")
        if self.var_method not in METHODS:
            raise ValueError(f"unknown VaR method {self.var_method!r}")
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")


@dataclass(frozen=True)
class MarginAccount:
    """Capital, committed positions, and the margin state they imply."""

    capital: float
    positions: tuple[Position, ...]
    margin_factor: float
    availability: float

    def __post_init__(self):
        if self.capital <= 0:
            raise ValueError("capital must be positive")
        # 0 is a riskless book, 1 the h -> 0 degenerate limit.
        if not 0.0 <= self.margin_factor <= 1.0:
            raise ValueError("margin factor must lie in [0, 1]")

    @property
    def invested(self) -> float:
        return float(sum(p.amount for p in self.positions))


@dataclass(frozen=True)
class MarketView:
    """Everything the margin engine needs to revalue a portfolio."""

    model: NormalModel
    spots: dict[str, float]
    scenarios: ScenarioSet | None = None


@dataclass(frozen=True)
class TradeDecision:
    allowed: bool
    margin_factor: float
    availability: float
    portfolio_var: float
    invested: float
    weights: dict[str, float]

    @property
    def verdict(self) -> str:
        return VERDICT_ALLOWED if self.allowed else VERDICT_DENIED


def margin_factor(var_p: float, h: float) -> float:
    """a = VaR/(h + VaR); 0 for a riskless book, approaching 1 as VaR grows.

    A negative VaR (drift-dominated portfolio) is clamped to zero with a
    warning: collateral cannot be negative.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if var_p < 0:
        warnings.warn(
            f"negative portfolio VaR {var_p:.6g} clamped to 0 for margining",
            EstimationWarning,
            stacklevel=2,
        )
        var_p = 0.0
    if var_p == 0.0:
        return 0.0
    return var_p / (h + var_p)


def availability(capital: float, invested: float, a: float) -> float:
    """Marginal availability M = C - a*W."""
    return float(capital - a * invested)


def per_asset_margin(vars_, amounts, h: float) -> float:
    """Aggregate margin factor as the invested-amount-weighted average.

    a_k = VaR_k/(h + VaR_k) per asset; the portfolio-level factor is
    sum(x_k a_k) with x the amount weights.
    """
    v = np.asarray(vars_, dtype=np.float64)
    w = np.asarray(amounts, dtype=np.float64)
    if v.shape != w.shape:
        raise ValueError("vars and amounts must have equal length")
    if np.any(w <= 0):
        raise ValueError("amounts must be positive")
    a_k = np.array([margin_factor(vk, h) for vk in v])
    x = w / w.sum()
    return float(x @ a_k)


def position_return_matrix(positions, market: MarketView, scenarios: ScenarioSet,
                      holding_days: int) -> np.ndarray:
    """m x k matrix of simple returns, one column per position."""
    cols = []
    for p in positions:
        if isinstance(p, AssetPosition):
            cols.append(scenarios.column(p.asset_id))
        else:
            u = p.spec.underlying_id
            if u not in market.spots:
                raise UnknownAsset(f"no spot price for option underlying {u!r}")
            cols.append(
                option_return_scenarios(
                    p.spec, market.spots[u], scenarios.column(u), holding_days
                )
            )
    return np.column_stack(cols)


def portfolio_var(positions, policy: MarginPolicy, market: MarketView,
                  holding_days: int = 1) -> tuple[float, np.ndarray]:
    """Portfolio VaR for the given positions under the policy's method.

    Returns (var, x) where x are the invested-amount weights.  Option
    positions are fully revalued per scenario; the analytic normal method
    therefore refuses portfolios holding options.
    """
    positions = [p for p in positions if p.amount > 0]
    if not positions:
        raise ValueError("portfolio holds no invested positions")
    amounts = np.array([p.amount for p in positions], dtype=np.float64)
    x = amounts / amounts.sum()

    if policy.var_method == METHOD_NORMAL:
        if any(isinstance(p, OptionPosition) for p in positions):
            raise UnsupportedMethod(
                "the analytic normal method cannot revalue options; "
                "use historical or monte_carlo"
            )
        model = market.model
        v = np.zeros(model.n_assets)
        for xi, p in zip(x, positions):
            try:
                v[model.index_of(p.asset_id)] += xi
            except Exception:
                raise UnknownAsset(f"asset {p.asset_id!r} not in model") from None
        mu_p = float(model.mu @ v)
        var_p = float(v @ model.sigma @ v)
        return float(var_normal(NormalParams(mu_p, math.sqrt(max(var_p, 0.0))),
                                policy.alpha)), x

    if policy.var_method == METHOD_HISTORICAL:
        if market.scenarios is None:
            raise ScenarioUnavailable("historical method needs a scenario set")
        scen = market.scenarios
    else:
        scen = sample(market.model, policy.n_scenarios, policy.seed)

    rets = position_return_matrix(positions, market, scen, holding_days)
    port = rets @ x
    return var_empirical(port, policy.alpha), x


def evaluate_trade(account: MarginAccount, proposed: Position | None,
                   policy: MarginPolicy, market: MarketView,
                   holding_days: int = 1) -> TradeDecision:
    """Approve or deny a proposed position by recomputing a and M.

    The decision is pure: committing the new account state on approval is
    the caller's job, and a denial leaves the inputs untouched.
    """
    positions = list(account.positions)
    if proposed is not None and proposed.amount > 0:
        positions.append(proposed)
    var_raw, x = portfolio_var(positions, policy, market, holding_days)
    a_star = margin_factor(max(var_raw, 0.0), policy.h)
    invested = float(sum(p.amount for p in positions if p.amount > 0))
    m = availability(account.capital, invested, a_star)
    weights: dict[str, float] = {}
    for p, xi in zip([p for p in positions if p.amount > 0], x.tolist()):
        weights[p.label] = weights.get(p.label, 0.0) + xi
    return TradeDecision(
        allowed=bool(m >= 0.0),
        margin_factor=a_star,
        availability=m,
        portfolio_var=var_raw,
        invested=invested,
        weights=weights,
    )


def eod_availability_scenarios(account: MarginAccount, scenarios: ScenarioSet,
                               market: MarketView,
                               holding_days: int = 1) -> np.ndarray:
    """End-of-day marginal availability per scenario.

    M = (1 - a) * w^T R + C - a * w^T 1; for a fully invested account
    (w^T 1 = C/a) this reduces to C * ((1-a)/a) * x^T R.
    """
    positions = [p for p in account.positions if p.amount > 0]
    if not positions:
        return np.full(scenarios.n_scenarios, account.capital, dtype=np.float64)
    w = np.array([p.amount for p in positions], dtype=np.float64)
    rets = position_return_matrix(positions, market, scenarios, holding_days)
    a = account.margin_factor
    return (1.0 - a) * (rets @ w) + account.capital - a * w.sum()


def eod_portfolio_values(account: MarginAccount, scenarios: ScenarioSet,
                         market: MarketView,
                         holding_days: int = 1) -> np.ndarray:
    """End-of-day portfolio value per scenario: C_f = w^T R + C."""
    positions = [p for p in account.positions if p.amount > 0]
    if not positions:
        return np.full(scenarios.n_scenarios, account.capital, dtype=np.float64)
    w = np.array([p.amount for p in positions], dtype=np.float64)
    rets = position_return_matrix(positions, market, scenarios, holding_days)
    return rets @ w + account.capital
