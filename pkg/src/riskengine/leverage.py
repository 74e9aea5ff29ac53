"""Maximum leverage factors under VaR-style and ES-style criteria.

A client financing a position ``l*w`` per unit of capital survives the day
when the per-lent-unit outcome (l_w^T R + 1) / (l_w^T 1) stays above a
threshold.  Capping the breach probability at ``alpha`` yields the
VaR-style bound l <= 1/(w*(h + VaR_alpha(R))); capping the average loss
per lent unit yields the ES-style bound, a root-finding problem in the
tail level.  For a portfolio, the same cap reads VaR_alpha(l_w^T R) <= 1,
which is quadratic in any single unknown factor and a second-order-cone
constraint when optimizing all factors jointly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoRoot
from .gaussian import norm_ppf, tail_mean_factor
from .measures import NormalParams, _tail, var_normal
from .scenarios import NormalModel, ScenarioSet, cholesky, portfolio_scenarios

OK = "ok"
REJECTED = "rejected"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

ES_BRACKET = (1e-12, 0.5)


@dataclass(frozen=True)
class LeverageBound:
    """A leverage query verdict: a bound, a rejection, or no bound at all."""

    status: str
    l_max: float | None = None
    detail: str = ""

    @classmethod
    def ok(cls, l_max: float, detail: str = "") -> "LeverageBound":
        return cls(OK, l_max, detail)

    @classmethod
    def rejected(cls, detail: str) -> "LeverageBound":
        return cls(REJECTED, None, detail)

    @classmethod
    def unbounded(cls, detail: str) -> "LeverageBound":
        return cls(UNBOUNDED, None, detail)


@dataclass(frozen=True)
class LeveragedPortfolio:
    """Capital fractions w_k > 0 (sum <= 1 leaves a reserve) and factors l_k >= 1."""

    asset_ids: tuple[str, ...]
    w: tuple[float, ...]
    l: tuple[float, ...]

    def __post_init__(self):
        if not len(self.asset_ids) == len(self.w) == len(self.l):
            raise DimensionMismatch("asset_ids, w and l must have equal length")
        if any(wk <= 0 for wk in self.w):
            raise ValueError("every weight must be positive")
        if any(lk < 1 for lk in self.l):
            raise ValueError("every leverage factor must be >= 1")

    @property
    def l_w(self) -> np.ndarray:
        return np.asarray(self.l) * np.asarray(self.w)

    def index_of(self, asset_id: str) -> int:
        try:
            return self.asset_ids.index(asset_id)
        except ValueError:
            raise DimensionMismatch(f"asset {asset_id!r} not in portfolio") from None


def max_leverage_single(params: NormalParams, w: float, alpha,
                        h: float = 0.0, z_override: float | None = None
                        ) -> LeverageBound:
    """VaR-style single-asset bound l_max = 1 / (w * (h + VaR_alpha(R)))."""
    if w <= 0:
        raise ValueError("w must be positive")
    var = var_normal(params, alpha, z_override)
    denom = h + var
    if denom <= 0:
        return LeverageBound.unbounded(
            f"h + VaR = {denom:.6g} <= 0: the breach probability never "
            f"reaches alpha at any leverage"
        )
    l_max = 1.0 / (w * denom)
    if l_max < 1.0:
        return LeverageBound.rejected(
            f"bound {l_max:.6g} < 1: asset too risky to lever"
        )
    return LeverageBound.ok(l_max)


def es_var_gap(params: NormalParams, x) -> float:
    """g(x) = ES_x(R) - VaR_x(R); for a normal law this is (C_x - q_{1-x})*sigma."""
    a = _tail(x)
    return (tail_mean_factor(a) - norm_ppf(1.0 - a)) * params.sigma


def _check_gap_monotone(params: NormalParams) -> None:
    # g must be strictly increasing in x for bisection to be valid.
    probes = (1e-6, 1e-3, 0.05, 0.25, 0.5)
    vals = [es_var_gap(params, x) for x in probes]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise RuntimeError(
            "ES-VaR gap is not monotone increasing on the bracket; "
            f"probe values {vals}"
        )


def max_leverage_es_single(params: NormalParams, w: float, h: float
                           ) -> LeverageBound:
    """ES-style bound: solve ES_x(R) - VaR_x(R) = h for x*, then 1/(w*VaR_x*).

    Setting h to the gap evaluated at some alpha recovers x* = alpha, so
    this bound and the VaR-style bound with h = 0 coincide there.
    """
    if w <= 0:
        raise ValueError("w must be positive")
    if h <= 0:
        raise ValueError("the average-loss threshold h must be positive")
    if params.sigma == 0.0:
        return LeverageBound.unbounded(
            "sigma = 0: the average loss per lent unit is 0 < h at any leverage"
        )
    _check_gap_monotone(params)
    lo, hi = ES_BRACKET
    g_lo, g_hi = es_var_gap(params, lo), es_var_gap(params, hi)
    if not g_lo < h < g_hi:
        raise NoRoot(
            f"h = {h:.6g} outside the reachable gap range "
            f"[g({lo:g}) = {g_lo:.6g}, g({hi:g}) = {g_hi:.6g}]"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if es_var_gap(params, mid) < h:
            lo = mid
        else:
            hi = mid
    x_star = 0.5 * (lo + hi)
    var_star = var_normal(params, x_star)
    if var_star <= 0:
        return LeverageBound.unbounded(
            f"VaR at the solved tail level x* = {x_star:.6g} is non-positive"
        )
    l_max = 1.0 / (w * var_star)
    if l_max < 1.0:
        return LeverageBound.rejected(
            f"bound {l_max:.6g} < 1: asset too risky to lever"
        )
    return LeverageBound.ok(l_max, detail=f"x_star={x_star:.12g}")


def _portfolio_slices(model: NormalModel, portfolio: LeveragedPortfolio):
    idx = [model.index_of(a) for a in portfolio.asset_ids]
    mu = model.mu[idx]
    sigma = model.sigma[np.ix_(idx, idx)]
    return mu, sigma


def max_leverage_sequential(model: NormalModel, portfolio: LeveragedPortfolio,
                            target: str, alpha,
                            z_override: float | None = None) -> LeverageBound:
    """Largest l for one asset with all other factors fixed.

    Solves VaR_alpha(l_w^T R) <= 1 for the target's factor.  With
    t = l*w_target the constraint is q*sqrt(s11 t^2 + 2bt + d) <= 1 + m +
    mu1*t, quadratic in t after squaring; the larger admissible root is
    taken and verified by plugging back.
    """
    a = _tail(alpha)
    q = z_override if z_override is not None else norm_ppf(1.0 - a)
    j = portfolio.index_of(target)
    mu, sigma = _portfolio_slices(model, portfolio)
    w_j = portfolio.w[j]

    c = portfolio.l_w
    c[j] = 0.0
    s11 = float(sigma[j, j])
    b = float(sigma[j] @ c)
    d = float(c @ sigma @ c)
    m = float(c @ mu)
    mu1 = float(mu[j])

    def slack(t: float) -> float:
        # q*sqrt(S(t)) - (1 + m + mu1*t); feasible iff <= 0
        s = s11 * t * t + 2.0 * b * t + d
        return q * math.sqrt(max(s, 0.0)) - (1.0 + m + mu1 * t)

    A = q * q * s11 - mu1 * mu1
    B = 2.0 * (q * q * b - mu1 * (1.0 + m))
    C0 = q * q * d - (1.0 + m) ** 2
    scale = max(abs(A), abs(B), abs(C0), 1e-300)

    tol = 1e-9
    if abs(A) <= 1e-14 * scale:
        # Linear boundary.
        if abs(B) <= 1e-14 * scale:
            if C0 <= 0 and mu1 >= 0:
                return LeverageBound.unbounded("constraint holds for every factor")
            return LeverageBound.rejected("VaR constraint cannot be met")
        t_lin = -C0 / B
        if B < 0:
            if mu1 > 0:
                return LeverageBound.unbounded(
                    "drift outruns quantile risk: constraint holds for all "
                    "large factors"
                )
            return LeverageBound.rejected("VaR constraint infeasible upward")
        candidates = [t_lin]
    else:
        disc = B * B - 4.0 * A * C0
        if disc < 0:
            if A < 0:
                # Parabola below zero everywhere: feasible wherever 1+m+mu1*t >= 0.
                if mu1 > 0:
                    return LeverageBound.unbounded(
                        "drift outruns quantile risk for every factor"
                    )
                candidates = [(1.0 + m) / -mu1] if mu1 < 0 else []
            else:
                return LeverageBound.rejected(
                    "VaR constraint infeasible at any leverage"
                )
        else:
            sq = math.sqrt(disc)
            p = -0.5 * (B + math.copysign(sq, B))
            roots = sorted({p / A, C0 / p} if p != 0 else {0.0})
            if A < 0:
                # Feasible outside the root interval; unbounded if drift helps.
                if mu1 > 0:
                    return LeverageBound.unbounded(
                        "drift outruns quantile risk beyond the root interval"
                    )
                candidates = [min(roots)]
            else:
                candidates = [max(roots), min(roots)]

    feasible = [
        t for t in candidates
        if t > 0 and (1.0 + m + mu1 * t) >= -1e-12 and slack(t) <= tol
    ]
    if not feasible:
        return LeverageBound.rejected(
            "no leverage factor >= 1 satisfies the VaR constraint"
        )
    t_star = max(feasible)
    l_star = t_star / w_j
    if l_star < 1.0:
        return LeverageBound.rejected(
            f"bound {l_star:.6g} < 1: the portfolio already exhausts the "
            f"VaR budget"
        )
    return LeverageBound.ok(l_star)


@dataclass(frozen=True)
class OptimizeResult:
    """Solution of a leverage optimization with its plug-back certificate."""

    status: str
    l: np.ndarray | None = None
    objective_value: float | None = None
    portfolio_var: float | None = None
    detail: str = ""

    @property
    def constraint_residual(self) -> float | None:
        if self.portfolio_var is None:
            return None
        return 1.0 - self.portfolio_var


def _portfolio_var_value(model: NormalModel, y: np.ndarray, q: float) -> float:
    return q * math.sqrt(float(y @ model.sigma @ y)) - float(model.mu @ y)


def optimize_leverage(model: NormalModel, w, alpha,
                      objective: str = "max_mean") -> OptimizeResult:
    """Jointly choose all leverage factors subject to VaR_alpha(l_w^T R) <= 1.

    ``max_mean`` maximizes the expected levered return l_w^T mu (a linear
    objective over a second-order-cone feasible set); ``max_min``
    maximizes the smallest factor by bisection on a floor t with convex
    feasibility subproblems, then breaks ties toward the larger mean.
    Factors are floored at 1: a margin loan below the client's own stake
    is not offered.
    """
    import cvxpy as cp

    solver_opts = dict(solver=cp.CLARABEL, tol_gap_abs=1e-11,
                       tol_gap_rel=1e-11, tol_feas=1e-11)
    a = _tail(alpha)
    q = norm_ppf(1.0 - a)
    wv = np.asarray(w, dtype=np.float64).reshape(-1)
    if wv.shape[0] != model.n_assets:
        raise DimensionMismatch("weights length differs from model assets")
    if np.any(wv <= 0):
        raise ValueError("weights must be positive")
    chol = cholesky(model)

    def var_of_l(lv: np.ndarray) -> float:
        return _portfolio_var_value(model, wv * lv, q)

    if var_of_l(np.ones_like(wv)) > 1.0 + 1e-9:
        return OptimizeResult(
            INFEASIBLE,
            detail="l = 1 already violates the VaR budget",
        )

    n = model.n_assets
    l_var = cp.Variable(n)
    y = cp.multiply(wv, l_var)
    soc = cp.SOC(1.0 + model.mu @ y, q * (chol.T @ y))

    if objective == "max_mean":
        floor = np.ones(n)
        prob = cp.Problem(cp.Maximize(model.mu @ y), [l_var >= floor, soc])
        with warnings.catch_warnings():
            # Near-degenerate instances may stop just short of the tight
            # tolerance; the plug-back certificate still vets the result.
            warnings.simplefilter("ignore")
            prob.solve(**solver_opts)
        if prob.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            return OptimizeResult(
                UNBOUNDED,
                detail="a feasible direction improves the mean without "
                "exhausting the VaR budget",
            )
        if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise RuntimeError(f"solver returned status {prob.status}")
        l_opt = np.maximum(np.asarray(l_var.value).reshape(-1), 1.0)
        return OptimizeResult(
            OK,
            l=l_opt,
            objective_value=float(model.mu @ (wv * l_opt)),
            portfolio_var=var_of_l(l_opt),
        )

    if objective == "max_min":
        t_param = cp.Parameter()
        feas = cp.Problem(
            cp.Minimize(q * cp.norm(chol.T @ y, 2) - model.mu @ y),
            [l_var >= t_param],
        )

        def feasible(t: float) -> bool:
            # Probes run at default tolerance; near-boundary solves may be
            # flagged inaccurate, which the bisection tolerates.
            t_param.value = t
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                feas.solve(solver=cp.CLARABEL)
            return feas.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and \
                feas.value <= 1.0 + 1e-9

        lo = 1.0
        hi = 2.0
        while feasible(hi):
            lo = hi
            hi *= 2.0
            if hi > 1e12:
                return OptimizeResult(
                    UNBOUNDED, detail="the factor floor can grow without bound"
                )
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        t_star = lo
        # Lexicographic tie-break: among floors t_star, prefer larger mean.
        tie = cp.Problem(
            cp.Maximize(model.mu @ y),
            [l_var >= t_star * (1.0 - 1e-9), soc],
        )
        tie.solve(**solver_opts)
        if tie.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise RuntimeError(f"tie-break solve returned {tie.status}")
        l_opt = np.maximum(np.asarray(l_var.value).reshape(-1), 1.0)
        return OptimizeResult(
            OK,
            l=l_opt,
            objective_value=t_star,
            portfolio_var=var_of_l(l_opt),
            detail=f"min factor {l_opt.min():.9g}",
        )

    raise ValueError(f"unknown objective {objective!r}")


def delta_quantile_check(portfolio: LeveragedPortfolio, scenarios: ScenarioSet,
                         alpha) -> float:
    """Empirical alpha-quantile of the levered portfolio return l_w^T R.

    Backtest diagnostic: when the VaR budget is saturated the quantile
    should sit near -1; fat-tailed scenario sets may push it below.
    """
    a = _tail(alpha)
    exposure = np.zeros(len(scenarios.asset_ids))
    for asset, lw in zip(portfolio.asset_ids, portfolio.l_w):
        try:
            j = scenarios.asset_ids.index(asset)
        except ValueError:
            raise DimensionMismatch(
                f"scenario set lacks portfolio asset {asset!r}"
            ) from None
        exposure[j] += lw
    rets = portfolio_scenarios(scenarios, exposure)
    k = max(1, min(math.ceil(rets.size * a - 1e-9), rets.size))
    return float(np.partition(rets, k - 1)[k - 1])
