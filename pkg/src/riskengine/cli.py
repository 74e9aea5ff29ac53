"""Batch command line over the same engine as the HTTP service.

    risk var      --prices DIR --portfolio FILE [--alpha A] [--method M]
                  [--horizon D] [--window N] [--seed S] [--m N] [--z-override Z]
    risk es       same options as var
    risk leverage --mode {single|sequential|optimize} --prices DIR
                  --portfolio FILE [--alpha A] [--h H] [--asset ID]
                  [--format {json|text}]
    risk margin   --prices DIR --portfolio FILE [--trade FILE]
                  [--alpha A] [--h H] [--method M]
    risk backtest --prices DIR --portfolio FILE [--window N] [--alpha A]
                  [--h H] [--split R]
    risk serve    [--port P] [--data-dir D]

Exit codes: 0 success, 2 input error, 3 margin check denied.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import jsonio
from .errors import RiskEngineError
from .jsonio import Money
from .leverage import (
    LeveragedPortfolio,
    delta_quantile_check,
    max_leverage_es_single,
    max_leverage_sequential,
    max_leverage_single,
    optimize_leverage,
)
from .margining import (
    AssetPosition,
    MarginAccount,
    MarginPolicy,
    MarketView,
    eod_availability_scenarios,
    evaluate_trade,
    margin_factor,
    portfolio_var,
    position_return_matrix,
)
from .marketdata import panel_slice
from .measures import (
    METHOD_HISTORICAL,
    METHOD_MONTE_CARLO,
    METHOD_NORMAL,
    NormalParams,
    TailLevel,
    es_empirical,
    es_normal,
    scale_horizon,
    var_empirical,
    var_normal,
)
from .portfolios import (
    Market,
    PortfolioFile,
    build_market,
    load_portfolio,
    load_price_dir,
    parse_position,
)
from .scenarios import ScenarioSet, fit_normal, sample

SCHEMA = 1

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_DENIED = 3


def _print(payload: dict) -> None:
    sys.stdout.write(jsonio.dumps(payload, indent=2) + "\n")


def _load(args) -> tuple[PortfolioFile, Market]:
    pf = load_portfolio(args.portfolio)
    series = load_price_dir(args.prices)
    assets: dict[str, None] = {}
    for r in pf.positions:
        assets.setdefault(r.asset if r.asset is not None else r.option.underlying)
    market = build_market(series, list(assets), getattr(args, "window", None))
    return pf, market


def _policy(pf: PortfolioFile, args) -> MarginPolicy:
    p = pf.policy
    return MarginPolicy(
        alpha=args.alpha if getattr(args, "alpha", None) is not None else p.alpha,
        h=args.h if getattr(args, "h", None) is not None else p.h,
        var_method=getattr(args, "method", None) or p.var_method,
        seed=args.seed if getattr(args, "seed", None) is not None else p.seed,
        n_scenarios=args.m if getattr(args, "m", None) is not None else p.n_scenarios,
    )


def cmd_report(args, measure: str) -> int:
    pf, market = _load(args)
    policy = _policy(pf, args)
    a = TailLevel(policy.alpha).alpha
    positions = [r.resolve(market.model, market.spots) for r in pf.positions]
    view = MarketView(model=market.model, spots=market.spots,
                      scenarios=market.historical)
    horizon = args.horizon
    if policy.var_method == METHOD_NORMAL:
        _, x = portfolio_var(positions, policy, view)
        v = np.zeros(market.model.n_assets)
        for xi, p in zip(x, positions):
            v[market.model.index_of(p.asset_id)] += xi
        params = scale_horizon(
            NormalParams(
                float(market.model.mu @ v),
                math.sqrt(max(float(v @ market.model.sigma @ v), 0.0)),
            ),
            horizon,
        )
        var = var_normal(params, a, args.z_override)
        es = es_normal(params, a, args.z_override)
    else:
        scen = (sample(market.model, policy.n_scenarios, policy.seed)
                if policy.var_method == METHOD_MONTE_CARLO else market.historical)
        rets = position_return_matrix(positions, view, scen, holding_days=1)
        amounts = np.array([p.amount for p in positions])
        port = rets @ (amounts / amounts.sum())
        scale = math.sqrt(horizon)
        var = var_empirical(port, a) * scale
        es = es_empirical(port, a) * scale
    _print({
        "schema": SCHEMA,
        "measure": measure,
        "alpha": a,
        "horizon_days": horizon,
        "var": var,
        "es": es,
        "method": policy.var_method,
        "model_window": market.window,
        "var_currency": Money(var * pf.capital),
        "es_currency": Money(es * pf.capital),
    })
    return EXIT_OK


def cmd_leverage(args) -> int:
    pf, market = _load(args)
    alpha = TailLevel(args.alpha if args.alpha is not None
                      else pf.policy.alpha).alpha
    entries = [(r.asset, r.amount / pf.capital, r.leverage)
               for r in pf.positions if r.asset is not None]
    if args.asset:
        entries = [e for e in entries if e[0] == args.asset]
    if not entries:
        raise RiskEngineError("no asset positions selected")
    rows = []

    if args.mode == "single":
        for asset, w, _ in entries:
            j = market.model.index_of(asset)
            params = NormalParams(
                float(market.model.mu[j]),
                math.sqrt(max(float(market.model.sigma[j, j]), 0.0)),
            )
            if args.h is not None and args.es:
                bound = max_leverage_es_single(params, w, args.h)
            else:
                bound = max_leverage_single(params, w, alpha,
                                            h=args.h or 0.0)
            rows.append({"asset": asset, "w": w, "status": bound.status,
                         "l_max": bound.l_max})
    elif args.mode == "sequential":
        ids, ws, ls = [], [], []
        for asset, w, l_client in entries:
            ids.append(asset)
            ws.append(w)
            ls.append(1.0)
            portfolio = LeveragedPortfolio(tuple(ids), tuple(ws), tuple(ls))
            bound = max_leverage_sequential(market.model, portfolio, asset,
                                            alpha)
            rows.append({"asset": asset, "w": w, "l_client": l_client,
                         "status": bound.status, "l_max": bound.l_max})
            ls[-1] = l_client  # the client's factor is what later steps see
    else:  # optimize
        ids = [e[0] for e in entries]
        w = np.array([e[1] for e in entries])
        result = optimize_leverage(market.model, w, alpha,
                                   objective=args.objective)
        if result.l is not None:
            for asset, wk, lk in zip(ids, w, result.l):
                rows.append({"asset": asset, "w": float(wk), "l_opt": float(lk)})
        payload = {
            "schema": SCHEMA, "mode": args.mode, "alpha": alpha,
            "status": result.status, "rows": rows,
            "objective": args.objective,
            "objective_value": result.objective_value,
            "portfolio_var": result.portfolio_var,
            "constraint_residual": result.constraint_residual,
        }
        _emit_table(payload, rows, args.format)
        return EXIT_OK

    payload = {"schema": SCHEMA, "mode": args.mode, "alpha": alpha,
               "rows": rows}
    _emit_table(payload, rows, args.format)
    return EXIT_OK


def _emit_table(payload: dict, rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        _print(payload)
        return
    if not rows:
        print("(no rows)")
        return
    cols = list(rows[0].keys())
    widths = {c: max(len(c), *(len(_cell(r.get(c))) for r in rows))
              for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in rows:
        print("  ".join(_cell(r.get(c)).ljust(widths[c]) for c in cols))


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_margin(args) -> int:
    pf = load_portfolio(args.portfolio)
    policy = _policy(pf, args)
    series = load_price_dir(args.prices)

    trade_request = None
    if args.trade:
        with open(args.trade, encoding="utf-8") as fh:
            trade_request = parse_position(json.load(fh))

    assets: dict[str, None] = {}
    for r in pf.positions:
        assets.setdefault(r.asset if r.asset is not None else r.option.underlying)
    if trade_request is not None:
        assets.setdefault(trade_request.asset
                          if trade_request.asset is not None
                          else trade_request.option.underlying)
    market = build_market(series, list(assets), getattr(args, "window", None))
    view = MarketView(model=market.model, spots=market.spots,
                      scenarios=market.historical)

    positions = tuple(r.resolve(market.model, market.spots)
                      for r in pf.positions)
    account = MarginAccount(pf.capital, positions, 0.0, pf.capital)
    proposed = (trade_request.resolve(market.model, market.spots)
                if trade_request is not None else None)
    decision = evaluate_trade(account, proposed, policy, view)
    _print({
        "schema": SCHEMA,
        "var": decision.portfolio_var,
        "a_star": Money(decision.margin_factor),
        "availability": Money(decision.availability),
        "verdict": decision.verdict,
        "invested": Money(decision.invested),
        "weights": decision.weights,
        "alpha": policy.alpha,
        "h": policy.h,
        "method": policy.var_method,
    })
    return EXIT_OK if decision.allowed else EXIT_DENIED


def cmd_backtest(args) -> int:
    pf, full = _load(args)
    policy = _policy(pf, args)
    assets = [r.asset for r in pf.positions if r.asset is not None]
    if not assets:
        raise RiskEngineError("backtest needs asset positions")
    n_total = full.panel.n_dates
    n_cal = max(2, int(n_total * args.split))
    if n_total - n_cal < 1:
        raise RiskEngineError(
            f"window of {n_total} rows leaves no backtest observations"
        )

    # Calibrate on the first part of the window, backtest on the rest.
    model = fit_normal(panel_slice(full.panel, 0, n_cal))
    back = ScenarioSet(full.panel.asset_ids, full.panel.matrix[n_cal:],
                       "historical")

    amounts = np.array([r.amount for r in pf.positions if r.asset is not None])
    w = amounts / pf.capital
    l = np.array([r.leverage for r in pf.positions if r.asset is not None])
    portfolio = LeveragedPortfolio(tuple(assets), tuple(w), tuple(l))
    q_lw = delta_quantile_check(portfolio, back, policy.alpha)

    # Margin diagnostics on the unlevered invested amounts.
    x = amounts / amounts.sum()
    idx = [model.index_of(a) for a in assets]
    mu_p = float(model.mu[idx] @ x)
    sig_p = math.sqrt(max(float(x @ model.sigma[np.ix_(idx, idx)] @ x), 0.0))
    var_p = var_normal(NormalParams(mu_p, sig_p), policy.alpha)
    a_star = margin_factor(max(var_p, 0.0), policy.h)

    account = MarginAccount(
        pf.capital,
        tuple(AssetPosition(a, amt) for a, amt in zip(assets, amounts)),
        a_star,
        pf.capital - a_star * float(amounts.sum()),
    )
    view = MarketView(model=model, spots=full.spots, scenarios=back)
    avail = eod_availability_scenarios(account, back, view)
    k = max(1, min(math.ceil(avail.size * policy.alpha - 1e-9), avail.size))
    q_avail = float(np.partition(avail, k - 1)[k - 1])

    _print({
        "schema": SCHEMA,
        "alpha": policy.alpha,
        "h": policy.h,
        "rows_total": int(n_total),
        "rows_calibration": int(n_cal),
        "rows_backtest": int(n_total - n_cal),
        "levered_quantile": q_lw,
        "leverage_constraint_violated": bool(q_lw < -1.0),
        "var": var_p,
        "a_star": Money(a_star),
        "initial_availability": Money(account.availability),
        "availability_breaches": int(np.count_nonzero(avail < 0)),
        "h_emp": -q_avail / pf.capital,
    })
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import run

    run(port=args.port, data_dir=args.data_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="risk", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, prices=True):
        if prices:
            p.add_argument("--prices", required=True,
                           help="directory of <ASSET>.csv files")
        p.add_argument("--portfolio", required=True, help="portfolio JSON file")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--window", type=int, default=None,
                       help="use only the most recent N joint returns")

    for name in ("var", "es"):
        p = sub.add_parser(name, help=f"portfolio {name} report")
        common(p)
        p.add_argument("--method", choices=[METHOD_NORMAL, METHOD_HISTORICAL,
                                            METHOD_MONTE_CARLO], default=None)
        p.add_argument("--horizon", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--m", type=int, default=None,
                       help="Monte Carlo scenario count")
        p.add_argument("--z-override", type=float, default=None,
                       help="explicit normal quantile (e.g. 1.65)")

    p = sub.add_parser("leverage", help="leverage factor tables")
    common(p)
    p.add_argument("--mode", choices=["single", "sequential", "optimize"],
                   required=True)
    p.add_argument("--asset", default=None, help="restrict to one asset")
    p.add_argument("--h", type=float, default=None,
                   help="safety threshold (VaR-style) or average loss (ES)")
    p.add_argument("--es", action="store_true",
                   help="single mode: use the ES-style bound (needs --h)")
    p.add_argument("--objective", choices=["max_mean", "max_min"],
                   default="max_mean")
    p.add_argument("--format", choices=["json", "text"], default="json")

    p = sub.add_parser("margin", help="margin check for a portfolio or trade")
    common(p)
    p.add_argument("--trade", default=None, help="proposed position JSON file")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--method", choices=[METHOD_NORMAL, METHOD_HISTORICAL,
                                        METHOD_MONTE_CARLO], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--m", type=int, default=None)

    p = sub.add_parser("backtest", help="calibrate/backtest split diagnostics")
    common(p)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--split", type=float, default=0.5,
                   help="calibration fraction of the window")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default=None,
                   help="storage root (default $RISK_DATA_DIR or ./risk-data)")

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("var", "es"):
            return cmd_report(args, args.command)
        if args.command == "leverage":
            return cmd_leverage(args)
        if args.command == "margin":
            return cmd_margin(args)
        if args.command == "backtest":
            return cmd_backtest(args)
        if args.command == "serve":
            return cmd_serve(args)
        raise AssertionError(args.command)
    except (RiskEngineError, ValueError, OSError, KeyError) as exc:
        print(f"risk: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
