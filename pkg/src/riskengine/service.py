"""HTTP service: portfolios, risk reports, leverage queries, margining.

Reads (risk, whatif, simulate) run concurrently and never mutate; commits
are serialized per store and guarded by optimistic versioning.  All
monetary JSON fields are serialized with exactly four decimal places.
"""

from __future__ import annotations

import math
import os
import uuid
import warnings
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response

from . import jsonio
from .errors import (
    InsufficientData,
    MalformedRow,
    RiskEngineError,
    ScenarioUnavailable,
    UnknownAsset,
    UnsupportedMethod,
)
from .jsonio import Money
from .leverage import (
    LeveragedPortfolio,
    max_leverage_es_single,
    max_leverage_sequential,
    optimize_leverage,
)
from .margining import (
    AssetPosition,
    MarginPolicy,
    eod_availability_scenarios,
    eod_portfolio_values,
    portfolio_var,
    position_return_matrix,
)
from .marketdata import load_prices
from .measures import (
    METHOD_MONTE_CARLO,
    METHOD_NORMAL,
    EstimationWarning,
    NormalParams,
    TailLevel,
    es_empirical,
    es_normal,
    scale_horizon,
    var_empirical,
    var_normal,
)
from .portfolios import parse_policy
from .scenarios import portfolio_scenarios, sample
from .store import (
    EV_CREATED,
    EV_POLICY_CHANGED,
    EV_PRICES_LOADED,
    EV_TRADE_COMMITTED,
    EV_TRADE_DENIED,
    NotFound,
    Store,
    VersionConflict,
    policy_to_dict,
    position_to_dict,
)

SCHEMA = 1

_HISTOGRAM_BINS = 101
_DEFAULT_QUANTILES = (0.001, 0.01, 0.05)


def _json(payload: dict, status: int = 200) -> Response:
    return Response(
        content=jsonio.dumps(payload),
        media_type="application/json",
        status_code=status,
    )


def _error(status: int, code: str, detail: str) -> Response:
    return _json({"schema": SCHEMA, "error": code, "detail": detail}, status)


def _histogram(values: np.ndarray) -> dict:
    counts, edges = np.histogram(values, bins=_HISTOGRAM_BINS)
    return {
        "edges": [Money(e) for e in edges.tolist()],
        "counts": counts.tolist(),
    }


def _quantiles(values: np.ndarray, alphas) -> dict:
    out = {}
    for a in sorted(set(alphas)):
        k = max(1, min(math.ceil(values.size * a - 1e-9), values.size))
        out[f"{a:g}"] = Money(float(np.partition(values, k - 1)[k - 1]))
    return out


def _decision_payload(decision, version: int) -> dict:
    return {
        "schema": SCHEMA,
        "allowed": decision.allowed,
        "verdict": decision.verdict,
        "new_margin_factor": Money(decision.margin_factor),
        "new_availability": Money(decision.availability),
        "portfolio_var": decision.portfolio_var,
        "invested": Money(decision.invested),
        "weights": decision.weights,
        "current_version": version,
    }


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("RISK_DATA_DIR", "risk-data"))
    store = Store(data_dir)
    app = FastAPI(title="risk service", version=str(SCHEMA),
                  openapi_url="/v1/spec")
    app.state.store = store

    @app.exception_handler(RiskEngineError)
    def _engine_error(_request, exc: RiskEngineError):
        if isinstance(exc, NotFound):
            return _error(404, "not_found", str(exc))
        if isinstance(exc, VersionConflict):
            return _json({
                "schema": SCHEMA, "error": "version_conflict",
                "expected": exc.expected, "actual": exc.actual,
            }, 412)
        if isinstance(exc, UnknownAsset):
            return _error(422, "unknown_asset", str(exc))
        if isinstance(exc, (InsufficientData, ScenarioUnavailable,
                            UnsupportedMethod)):
            return _error(409, type(exc).__name__, str(exc))
        if isinstance(exc, MalformedRow):
            return _error(400, type(exc).__name__, str(exc))
        return _error(400, type(exc).__name__, str(exc))

    @app.exception_handler(ValueError)
    def _value_error(_request, exc: ValueError):
        return _error(400, "invalid_input", str(exc))

    @app.exception_handler(KeyError)
    def _key_error(_request, exc: KeyError):
        return _error(400, "missing_field", f"missing field {exc}")

    # ------------------------------------------------------------------
    # market data

    @app.put("/v1/assets/{asset_id}/prices", status_code=204)
    async def upload_prices(asset_id: str, request: Request):
        body = await request.body()
        text = body.decode("utf-8")
        load_prices(text, asset_id)  # validate; raises 400 with line numbers
        with store.lock:
            if store.assets.get(asset_id) != text:
                store.append(EV_PRICES_LOADED, None,
                             {"asset_id": asset_id, "csv": text})
        return Response(status_code=204)

    @app.get("/v1/assets")
    def list_assets():
        series = store.price_series()
        return _json({
            "schema": SCHEMA,
            "assets": {a: len(s) for a, s in sorted(series.items())},
        })

    # ------------------------------------------------------------------
    # portfolios

    @app.post("/v1/portfolios", status_code=201)
    async def create_portfolio(request: Request):
        body = await request.json()
        pid = str(body.get("id") or uuid.uuid4())
        with store.lock:
            if pid in store.portfolios:
                return _error(409, "already_exists", f"portfolio {pid} exists")
            parse_policy(body["policy"])  # validate before logging
            store.append(EV_CREATED, pid, {"portfolio": {
                "id": pid,
                "owner": str(body.get("owner", "")),
                "capital": float(body["capital"]),
                "positions": body.get("positions", []),
                "policy": body["policy"],
            }})
            state = store.get(pid)
        return _json(_record_view(state), 201)

    def _record_view(state) -> dict:
        view = {
            "schema": SCHEMA,
            "id": state.id,
            "owner": state.owner,
            "version": state.version,
            "capital": Money(state.capital),
            "invested": Money(sum(p.amount for p in state.positions)),
            "positions": [position_to_dict(p) for p in state.positions],
            "policy": policy_to_dict(state.policy),
            "margin_factor": Money(state.margin_factor),
            "availability": Money(state.availability),
        }
        try:
            decision, _ = store._evaluate(state, None)
            view["risk"] = {
                "portfolio_var": decision.portfolio_var,
                "margin_factor": Money(decision.margin_factor),
                "availability": Money(decision.availability),
                "weights": decision.weights,
            }
        except (RiskEngineError, ValueError) as exc:
            view["risk"] = None
            view["risk_error"] = str(exc)
        return view

    @app.get("/v1/portfolios")
    def list_portfolios():
        with store.lock:
            rows = [
                {"id": s.id, "owner": s.owner, "version": s.version}
                for s in store.portfolios.values()
            ]
        return _json({"schema": SCHEMA, "portfolios": rows})

    @app.get("/v1/portfolios/{pid}")
    def get_portfolio(pid: str):
        return _json(_record_view(store.get(pid)))

    @app.put("/v1/portfolios/{pid}/policy")
    async def change_policy(pid: str, request: Request):
        body = await request.json()
        with store.lock:
            state = store.get(pid)
            store.require_version(state, int(body["expected_version"]))
            parse_policy(body["policy"])
            store.append(EV_POLICY_CHANGED, pid, {"policy": body["policy"]})
            return _json({"schema": SCHEMA, "id": pid,
                          "version": state.version})

    # ------------------------------------------------------------------
    # risk reports

    @app.get("/v1/portfolios/{pid}/risk")
    def risk_report(pid: str, alpha: float | None = None,
                    horizon_days: int = 1, method: str | None = None,
                    window: int | None = None, seed: int | None = None,
                    m: int | None = None):
        state = store.get(pid)
        a = TailLevel(alpha if alpha is not None else state.policy.alpha).alpha
        meth = method or state.policy.var_method
        positions = [p for p in state.positions if p.amount > 0]
        if not positions:
            raise InsufficientData("portfolio holds no positions")
        assets = store.assets_of(positions)
        market = store.market_for(assets, window)
        policy = MarginPolicy(
            alpha=a, h=state.policy.h, var_method=meth,
            seed=seed if seed is not None else state.policy.seed,
            n_scenarios=m if m is not None else state.policy.n_scenarios,
        )
        warning = None
        if meth == METHOD_NORMAL:
            _, x = portfolio_var(positions, policy, store._market_view(market))
            v = np.zeros(market.model.n_assets)
            for xi, p in zip(x, positions):
                v[market.model.index_of(p.asset_id)] += xi
            params = NormalParams(
                float(market.model.mu @ v),
                math.sqrt(max(float(v @ market.model.sigma @ v), 0.0)),
            )
            params_h = scale_horizon(params, horizon_days)
            var = var_normal(params_h, a)
            es = es_normal(params_h, a)
        else:
            if meth == METHOD_MONTE_CARLO:
                scen = sample(market.model, policy.n_scenarios, policy.seed)
            else:
                scen = market.historical
                if scen.n_scenarios * a < 1.0:
                    warning = (
                        f"n*alpha = {scen.n_scenarios * a:.3g} < 1: "
                        "quantile estimate is the sample minimum"
                    )
            rets = position_return_matrix(positions, store._market_view(market),
                                          scen, holding_days=1)
            amounts = np.array([p.amount for p in positions])
            port = rets @ (amounts / amounts.sum())
            scale = math.sqrt(horizon_days)
            with warnings.catch_warnings():
                # A thin sample is reported via the response warning field.
                warnings.simplefilter("ignore", EstimationWarning)
                var = var_empirical(port, a) * scale
                es = es_empirical(port, a) * scale

        payload = {
            "schema": SCHEMA,
            "alpha": a,
            "horizon_days": horizon_days,
            "var": var,
            "es": es,
            "method": meth,
            "model_window": market.window,
            "var_currency": Money(var * state.capital),
            "es_currency": Money(es * state.capital),
        }
        if warning:
            payload["warning"] = warning
        return _json(payload)

    # ------------------------------------------------------------------
    # margining workflow

    @app.post("/v1/portfolios/{pid}/whatif")
    async def whatif(pid: str, request: Request):
        body = await request.json()
        state = store.get(pid)
        decision, _ = store._evaluate(state, body.get("trade"))
        return _json(_decision_payload(decision, state.version))

    @app.post("/v1/portfolios/{pid}/trades")
    async def commit_trade(pid: str, request: Request):
        body = await request.json()
        trade = body.get("trade")
        with store.lock:
            state = store.get(pid)
            store.require_version(state, int(body["expected_version"]))
            decision, _ = store._evaluate(state, trade)
            payload = {"trade": trade, "decision": {
                "margin_factor": decision.margin_factor,
                "availability": decision.availability,
                "portfolio_var": decision.portfolio_var,
            }}
            if decision.allowed:
                store.append(EV_TRADE_COMMITTED, pid, payload)
                return _json(_decision_payload(decision, state.version), 201)
            store.append(EV_TRADE_DENIED, pid, payload)
            return _json(_decision_payload(decision, state.version), 409)

    # ------------------------------------------------------------------
    # leverage

    @app.get("/v1/portfolios/{pid}/leverage/max")
    def leverage_max(pid: str, asset: str, alpha: float | None = None,
                     method: str = "var", h: float = 0.0,
                     w: float | None = None):
        state = store.get(pid)
        a = TailLevel(alpha if alpha is not None else state.policy.alpha).alpha
        asset_positions = [p for p in state.positions
                           if isinstance(p, AssetPosition) and p.amount > 0]
        ids = [p.asset_id for p in asset_positions]
        weights = {p.asset_id: p.amount / state.capital for p in asset_positions}
        factors = {p.asset_id: p.leverage for p in asset_positions}
        if asset not in weights:
            if w is None:
                raise UnknownAsset(
                    f"{asset!r} is not held; pass an intended capital "
                    f"fraction w="
                )
            weights[asset] = w
            factors[asset] = 1.0
            ids = ids + [asset]
        elif w is not None:
            weights[asset] = w
        market = store.market_for(ids)

        if method == "es":
            if h <= 0:
                raise ValueError("ES-style bound needs an average-loss h > 0")
            j = market.model.index_of(asset)
            params = NormalParams(
                float(market.model.mu[j]),
                math.sqrt(max(float(market.model.sigma[j, j]), 0.0)),
            )
            bound = max_leverage_es_single(params, weights[asset], h)
        elif method == "var":
            portfolio = LeveragedPortfolio(
                asset_ids=tuple(ids),
                w=tuple(weights[i] for i in ids),
                l=tuple(factors[i] for i in ids),
            )
            bound = max_leverage_sequential(market.model, portfolio, asset, a)
        else:
            raise ValueError(f"method must be 'var' or 'es', got {method!r}")
        return _json({
            "schema": SCHEMA,
            "asset": asset,
            "status": bound.status,
            "l_max": bound.l_max,
            "detail": bound.detail,
        })

    @app.post("/v1/portfolios/{pid}/leverage/optimize")
    async def leverage_opt(pid: str, request: Request):
        body = await request.json()
        state = store.get(pid)
        a = TailLevel(float(body.get("alpha", state.policy.alpha))).alpha
        objective = str(body.get("objective", "max_mean"))
        asset_positions = [p for p in state.positions
                           if isinstance(p, AssetPosition) and p.amount > 0]
        if not asset_positions:
            raise InsufficientData("no asset positions to optimize")
        ids = [p.asset_id for p in asset_positions]
        market = store.market_for(ids)
        w = np.array([p.amount / state.capital for p in asset_positions])
        result = optimize_leverage(market.model, w, a, objective)
        return _json({
            "schema": SCHEMA,
            "status": result.status,
            "objective": objective,
            "assets": ids,
            "l": None if result.l is None else result.l.tolist(),
            "objective_value": result.objective_value,
            "portfolio_var": result.portfolio_var,
            "constraint_residual": result.constraint_residual,
            "detail": result.detail,
        })

    # ------------------------------------------------------------------
    # end-of-day simulation

    @app.post("/v1/portfolios/{pid}/simulate")
    async def simulate(pid: str, request: Request):
        body = await request.json()
        state = store.get(pid)
        method = str(body.get("method", state.policy.var_method))
        positions = [p for p in state.positions if p.amount > 0]
        if not positions:
            raise InsufficientData("portfolio holds no positions")
        assets = store.assets_of(positions)
        market = store.market_for(assets)
        if method == METHOD_MONTE_CARLO:
            m = int(body.get("m", state.policy.n_scenarios))
            seed = int(body.get("seed", state.policy.seed))
            scen = sample(market.model, m, seed)
        else:
            seed = None
            scen = market.historical
        alphas = [float(x) for x in body.get(
            "alphas", list(_DEFAULT_QUANTILES) + [state.policy.alpha])]
        for x in alphas:
            TailLevel(x)
        account = state.account()
        view = store._market_view(market)
        avail = eod_availability_scenarios(account, scen, view)
        values = eod_portfolio_values(account, scen, view)
        a_pol = state.policy.alpha
        k = max(1, min(math.ceil(avail.size * a_pol - 1e-9), avail.size))
        q_avail = float(np.partition(avail, k - 1)[k - 1])
        return _json({
            "schema": SCHEMA,
            "method": method,
            "m": scen.n_scenarios,
            "seed": seed,
            "availability": {
                "histogram": _histogram(avail),
                "quantiles": _quantiles(avail, alphas),
                "h_emp": -q_avail / state.capital,
            },
            "portfolio_value": {
                "histogram": _histogram(values),
                "quantiles": _quantiles(values, alphas),
            },
        })

    return app


def run(port: int = 8000, data_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host="127.0.0.1", port=port,
                log_level="warning")
