"""Value-at-risk and expected shortfall.

Conventions used throughout the engine:

* ``alpha`` is the TAIL (exceedance) probability, in (0, 0.5].  A "5% VaR"
  has alpha = 0.05; the API never accepts a 95% confidence figure.
* Inputs are per-period portfolio RETURNS (payoff convention); VaR is the
  loss threshold, so for a normal return the closed form is
  ``q_{1-alpha} * sigma - mu``.  It may be negative when drift dominates
  and is returned unclamped.
* Empirical estimators use the order statistic r_(ceil(n*alpha)) with no
  interpolation, matching the tail-average estimator's indexing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptySample
from .gaussian import norm_ppf, tail_mean_factor

METHOD_NORMAL = "normal"
METHOD_HISTORICAL = "historical"
METHOD_MONTE_CARLO = "monte_carlo"
METHODS = (METHOD_NORMAL, METHOD_HISTORICAL, METHOD_MONTE_CARLO)


class EstimationWarning(UserWarning):
    """Raised (as a warning) when an estimate rests on too little data."""


@dataclass(frozen=True)
class TailLevel:
    """Tail probability alpha in (0, 0.5]."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError(f"tail level must lie in (0, 0.5], got {self.alpha}")

    def __float__(self) -> float:
        return self.alpha


def _tail(alpha) -> float:
    """Validate and unwrap a tail level given as float or TailLevel."""
    if isinstance(alpha, TailLevel):
        return alpha.alpha
    return TailLevel(float(alpha)).alpha


@dataclass(frozen=True)
class NormalParams:
    """Mean and standard deviation of a per-period return."""

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class DiscreteLoss:
    """Finite loss distribution: (loss value, probability) pairs."""

    outcomes: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("discrete loss needs at least one outcome")
        total = 0.0
        for _, p in self.outcomes:
            if p < 0:
                raise ValueError(f"negative probability {p}")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, expected 1")


@dataclass(frozen=True)
class RiskReport:
    """VaR/ES pair at a tail level and horizon, tagged with the method."""

    alpha: float
    horizon_days: int
    var: float
    es: float
    method: str

    def __post_init__(self):
        _tail(self.alpha)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if math.isfinite(self.var) and math.isfinite(self.es):
            if self.es < self.var - 1e-12 * max(1.0, abs(self.var)):
                raise ValueError(f"es {self.es} below var {self.var}")


def var_normal(p: NormalParams, alpha, z_override: float | None = None) -> float:
    """Normal-model VaR: q_{1-alpha} * sigma - mu.

    ``z_override`` substitutes an explicit quantile (e.g. the rounded 1.65
    often used in practice) for the exact inverse CDF value.
    """
    a = _tail(alpha)
    z = z_override if z_override is not None else norm_ppf(1.0 - a)
    return z * p.sigma - p.mu


def es_normal(p: NormalParams, alpha, z_override: float | None = None) -> float:
    """Normal-model expected shortfall: C_alpha * sigma - mu.

    C_alpha = exp(-q^2/2) / (alpha * sqrt(2 pi)) is the magnitude of the
    standard-normal tail mean E[Z | Z < -q].  With ``z_override`` the
    constant is computed from the supplied quantile instead of the exact
    one, consistent with var_normal.
    """
    a = _tail(alpha)
    if z_override is not None:
        c = math.exp(-0.5 * z_override * z_override) / (a * math.sqrt(2.0 * math.pi))
    else:
        c = tail_mean_factor(a)
    return c * p.sigma - p.mu


def var_discrete(d: DiscreteLoss, alpha) -> float:
    """Exact VaR of a finite loss distribution: inf{l : P(L > l) <= alpha}."""
    a = _tail(alpha)
    support = sorted(set(loss for loss, _ in d.outcomes))
    mass = {s: 0.0 for s in support}
    for loss, p in d.outcomes:
        mass[loss] += p
    exceed = sum(mass.values())
    for s in support:
        exceed -= mass[s]  # now P(L > s)
        if exceed <= a + 1e-15:
            return s
    return support[-1]


def _order_index(n: int, alpha: float) -> int:
    """k = ceil(n * alpha), guarded against float roundoff, clamped to [1, n]."""
    k = math.ceil(n * alpha - 1e-9)
    return min(max(k, 1), n)


def var_empirical(sample, alpha) -> float:
    """Empirical VaR: the negated order statistic r_(ceil(n*alpha))."""
    a = _tail(alpha)
    x = np.asarray(sample, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        raise EmptySample("var_empirical needs at least one observation")
    if n * a < 1.0:
        warnings.warn(
            f"n*alpha = {n * a:.3g} < 1: the estimate is the sample minimum",
            EstimationWarning,
            stacklevel=2,
        )
    k = _order_index(n, a)
    return -float(np.partition(x, k - 1)[k - 1])


def es_empirical(sample, alpha) -> float:
    """Empirical expected shortfall from sorted returns r_(1) <= ... <= r_(n).

    -(1/alpha) * [ (1/n) * sum_{k<K} r_(k) + (alpha - (K-1)/n) * r_(K) ]
    with K = ceil(n*alpha); reduces to minus the mean of the worst
    n*alpha observations when that count is an integer.
    """
    a = _tail(alpha)
    x = np.asarray(sample, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        raise EmptySample("es_empirical needs at least one observation")
    k = _order_index(n, a)
    worst = np.sort(np.partition(x, k - 1)[:k])
    head = float(np.sum(worst[: k - 1])) / n
    return -(head + (a - (k - 1) / n) * float(worst[k - 1])) / a


def scale_horizon(p: NormalParams, days: int) -> NormalParams:
    """Square-root-of-time scaling: (mu * T, sigma * sqrt(T))."""
    if days < 1:
        raise ValueError(f"horizon must be >= 1 day, got {days}")
    return NormalParams(mu=p.mu * days, sigma=p.sigma * math.sqrt(days))
