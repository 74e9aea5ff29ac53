"""Acceptance suite: one test per shipping criterion, at stated tolerances.

Each test enforces its runtime budget; the terminal summary prints one
PASS/FAIL line per criterion (see conftest).
"""

import json
import math
import re
import shutil
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from riskengine.cli import main as cli_main
from riskengine.gaussian import norm_ppf
from riskengine.leverage import (
    OK,
    LeveragedPortfolio,
    delta_quantile_check,
    es_var_gap,
    max_leverage_es_single,
    max_leverage_sequential,
    optimize_leverage,
)
from riskengine.margining import (
    AssetPosition,
    MarginAccount,
    MarginPolicy,
    MarketView,
    OptionPosition,
    availability,
    eod_availability_scenarios,
    evaluate_trade,
    margin_factor,
)
from riskengine.marketdata import load_prices
from riskengine.measures import (
    DiscreteLoss,
    NormalParams,
    es_empirical,
    scale_horizon,
    var_discrete,
    var_empirical,
    var_normal,
)
from riskengine.portfolios import OptionRequest, build_market
from riskengine.scenarios import NormalModel, cholesky, sample
from riskengine.service import create_app
from riskengine.store import Store

from conftest import csv_from_returns, demo_history
from test_measures import _es_integral_oracle


class Budget:
    """Context manager asserting the criterion's runtime budget."""

    def __init__(self, seconds: float):
        self.limit = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            elapsed = time.perf_counter() - self.t0
            assert elapsed < self.limit, (
                f"runtime {elapsed:.2f}s exceeds the {self.limit:.0f}s budget"
            )
        return False


def test_riskmetrics_currency_desk_goldens(tmp_path, capsys):
    """1-day VaR 87,450 exactly at 4 decimals; 10-day within 1 of 276,541."""
    with Budget(1.0):
        params = NormalParams(0.0, 0.0053)
        one_day = var_normal(params, 0.05, z_override=1.65) * 10_000_000
        assert f"{one_day:.4f}" == "87450.0000"
        ten_day = var_normal(scale_horizon(params, 10), 0.05,
                             z_override=1.65) * 10_000_000
        assert abs(ten_day - 276_541) < 1.0

    # End to end through the CLI's 4-decimal serialization.
    x = 0.0053 / math.sqrt(2.0)
    prices = tmp_path / "prices"
    prices.mkdir()
    (prices / "DEMUSD.csv").write_text(csv_from_returns([x, -x]))
    pf = tmp_path / "pf.json"
    pf.write_text(json.dumps({
        "capital": 10_000_000,
        "positions": [{"asset": "DEMUSD", "amount": 10_000_000}],
        "policy": {"alpha": 0.05, "h": 0.2, "method": "normal"},
    }))
    rc = cli_main(["var", "--prices", str(prices), "--portfolio", str(pf),
                   "--alpha", "0.05", "--method", "normal",
                   "--z-override", "1.65"])
    out = capsys.readouterr().out
    assert rc == 0
    assert '"var_currency": 87450.0000' in out


def test_bond_portfolio_subadditivity_violation():
    """Discrete VaR: 0 per bond, 100 for the sum, at the 5% tail."""
    with Budget(1.0):
        bond = DiscreteLoss(((0.0, 0.96), (100.0, 0.04)))
        both = DiscreteLoss(((0.0, 0.9216), (100.0, 0.0768), (200.0, 0.0016)))
        assert var_discrete(bond, 0.05) == 0.0
        assert var_discrete(both, 0.05) == 100.0
        assert var_discrete(both, 0.05) > 2 * var_discrete(bond, 0.05)


def test_margin_formula_goldens():
    """a(0.0804)=0.2867, a(0.0663)=0.2491 (5e-4); M(45000@0.2378)=-701 (1)."""
    with Budget(1.0):
        assert margin_factor(0.0804, 0.2) == pytest.approx(0.2867, abs=5e-4)
        assert margin_factor(0.0663, 0.2) == pytest.approx(0.2491, abs=5e-4)
        assert availability(10_000, 45_000, 0.2378) == pytest.approx(-701,
                                                                     abs=1.0)


FIVE_ASSET_MODEL = NormalModel(
    ["a1", "a2", "a3", "a4", "a5"],
    [4e-4, 9e-4, 1e-4, 3e-4, 6e-4],
    (np.array([
        [1.00, 0.20, 0.15, 0.10, 0.25],
        [0.20, 1.00, 0.18, 0.12, 0.20],
        [0.15, 0.18, 1.00, 0.22, 0.30],
        [0.10, 0.12, 0.22, 1.00, 0.15],
        [0.25, 0.20, 0.30, 0.15, 1.00],
    ]) * np.outer([0.030, 0.032, 0.016, 0.021, 0.024],
                  [0.030, 0.032, 0.016, 0.021, 0.024])),
)


def test_leverage_saturation_quantile():
    """Sequentially saturated book: 1% quantile of l_w'R is -1 +/- 0.02."""
    with Budget(30.0):
        alpha = 0.01
        ids = FIVE_ASSET_MODEL.asset_ids
        ws = (0.1, 0.2, 0.2, 0.3, 0.1)
        client: list[float] = []
        for k, asset in enumerate(ids):
            pf = LeveragedPortfolio(ids[:k + 1], ws[:k + 1],
                                    tuple(client) + (1.0,))
            bound = max_leverage_sequential(FIVE_ASSET_MODEL, pf, asset,
                                            alpha)
            assert bound.status == OK
            # Clients stay below the cap until the last asset saturates it.
            frac = 1.0 if k == len(ids) - 1 else 0.6
            client.append(max(1.0, frac * bound.l_max))
        portfolio = LeveragedPortfolio(ids, ws, tuple(client))

        # The final assignment saturates the VaR budget exactly.
        lw = portfolio.l_w
        q = norm_ppf(1 - alpha)
        var = q * math.sqrt(lw @ FIVE_ASSET_MODEL.sigma @ lw) \
            - FIVE_ASSET_MODEL.mu @ lw
        assert var == pytest.approx(1.0, abs=1e-9)

        scen = sample(FIVE_ASSET_MODEL, 500_000, seed=20160726)
        quantile = delta_quantile_check(portfolio, scen, alpha)
        assert quantile == pytest.approx(-1.0, abs=0.02)


def test_es_var_leverage_equivalence():
    """h = gap(alpha) makes the ES-style bound match VaR-style to 1e-8."""
    with Budget(5.0):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 100:
            params = NormalParams(float(rng.uniform(-0.002, 0.003)),
                                  float(rng.uniform(0.005, 0.06)))
            alpha = float(rng.uniform(0.002, 0.45))
            w = float(rng.uniform(0.1, 1.0))
            var = var_normal(params, alpha)
            if var <= 1e-6:
                continue
            h = es_var_gap(params, alpha)
            bound = max_leverage_es_single(params, w, h)
            assert bound.status == OK
            expected = 1.0 / (w * var)
            assert bound.l_max == pytest.approx(expected, rel=1e-8)
            checked += 1


def _boundary_search(model, w, alpha, n_points, rng):
    """Vectorized random search over the VaR boundary (oracle)."""
    q = norm_ppf(1.0 - alpha)
    chol = cholesky(model)
    n = model.n_assets
    d = rng.exponential(1.0, (n_points, n))

    def var_rows(s):
        y = w * (1.0 + s[:, None] * d)
        return q * np.linalg.norm(y @ chol, axis=1) - y @ model.mu

    lo = np.zeros(n_points)
    hi = np.ones(n_points)
    for _ in range(60):
        feasible = var_rows(hi) <= 1.0
        if not feasible.any():
            break
        lo[feasible] = hi[feasible]
        hi[feasible] *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        feasible = var_rows(mid) <= 1.0
        lo[feasible] = mid[feasible]
        hi[~feasible] = mid[~feasible]
    candidates = w * (1.0 + lo[:, None] * d)
    objectives = candidates @ model.mu
    return float(objectives.max())


def test_optimizer_certificate():
    """max_mean: feasible to 1e-6, beats 1e4 random points, 1.001x breaks."""
    with Budget(60.0):
        rng = np.random.default_rng(7)
        q = norm_ppf(0.95)
        done = 0
        while done < 50:
            n = int(rng.integers(2, 6))
            a = rng.normal(size=(n, n)) * 0.01
            sigma = a @ a.T + np.diag(rng.uniform(0.01, 0.03, n) ** 2)
            mu = rng.uniform(-0.002, 0.003, n)
            if mu.max() <= 1e-4:
                continue  # keep the VaR budget active at the optimum
            model = NormalModel([f"s{i}" for i in range(n)], mu, sigma)
            w = rng.uniform(0.05, 0.5, n)
            res = optimize_leverage(model, w, 0.05, "max_mean")
            assert res.status == OK
            assert res.portfolio_var <= 1.0 + 1e-6

            best_random = _boundary_search(model, w, 0.05, 10_000, rng)
            assert res.objective_value >= best_random - 1e-7

            lw = w * res.l
            scaled_var = (q * math.sqrt(1.001**2 * (lw @ model.sigma @ lw))
                          - 1.001 * (model.mu @ lw))
            assert scaled_var > 1.0
            done += 1


def test_es_estimator_oracle():
    """Integer n*alpha tail mean; quantile-integral identity to 1e-10."""
    with Budget(5.0):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(4, 400))
            x = rng.standard_t(df=5, size=n) * 0.02

            k = int(rng.integers(1, max(2, n // 2)))
            alpha_int = k / n
            if alpha_int <= 0.5:
                expected = -np.sort(x)[:k].mean()
                assert es_empirical(x, alpha_int) == pytest.approx(
                    expected, rel=1e-12, abs=1e-15
                )

            alpha = float(rng.uniform(1.0 / n, 0.5))
            assert es_empirical(x, alpha) == pytest.approx(
                _es_integral_oracle(x, alpha), abs=1e-10
            )


BASE_POSITIONS = (
    AssetPosition("ISP", 6000.0),
    AssetPosition("IGV", 21000.0),
    AssetPosition("GEN", 3000.0),
)


def test_protective_put_and_call_effect():
    """Put strictly cuts VaR, call strictly raises it; margins follow."""
    with Budget(30.0):
        csvs = demo_history()
        series = {a: load_prices(t, a) for a, t in csvs.items()}
        market = build_market(series, ["ISP", "IGV", "GEN", "ENI"])
        view = MarketView(model=market.model, spots=market.spots,
                          scenarios=market.historical)
        policy = MarginPolicy(alpha=0.001, h=0.2, var_method="monte_carlo",
                              seed=42, n_scenarios=500_000)
        account = MarginAccount(10_000.0, BASE_POSITIONS, 0.0, 10_000.0)

        base = evaluate_trade(account, None, policy, view)
        put = OptionPosition(
            OptionRequest("IGV", "put", "last", 10 / 12, 0.10, "fit")
            .resolve(market.model, market.spots), 10_000.0)
        hedged = evaluate_trade(account, put, policy, view)
        call = OptionPosition(
            OptionRequest("IGV", "call", "last", 10 / 12, 0.10, "fit")
            .resolve(market.model, market.spots), 2_000.0)
        risky = evaluate_trade(account, call, policy, view)

        assert hedged.portfolio_var < base.portfolio_var
        assert risky.portfolio_var > base.portfolio_var
        assert hedged.margin_factor < base.margin_factor < risky.margin_factor
        assert hedged.allowed
        assert not risky.allowed  # the call configuration is denied


def test_round_trip_margining_guarantee():
    """Fully invested at computed a: P(M <= -hC) = alpha within 3 MC SEs."""
    with Budget(30.0):
        alpha, h, capital = 0.01, 0.1, 10_000.0
        ids = ["p", "q", "r"]
        vols = np.array([0.02, 0.03, 0.015])
        corr = np.array([[1.0, 0.3, 0.2], [0.3, 1.0, 0.25], [0.2, 0.25, 1.0]])
        model = NormalModel(ids, np.zeros(3), corr * np.outer(vols, vols))
        x = np.array([0.5, 0.3, 0.2])
        sigma_p = math.sqrt(x @ model.sigma @ x)
        var_p = var_normal(NormalParams(0.0, sigma_p), alpha)
        a = margin_factor(var_p, h)
        invested = capital / a  # saturates M0 = 0: fully invested
        positions = tuple(AssetPosition(i, float(xi * invested))
                          for i, xi in zip(ids, x))
        account = MarginAccount(capital, positions, a, 0.0)

        scen = sample(model, 500_000, seed=314159)
        view = MarketView(model=model, spots={}, scenarios=scen)
        m = eod_availability_scenarios(account, scen, view)
        p_hat = float(np.mean(m <= -h * capital))
        se = math.sqrt(alpha * (1 - alpha) / scen.n_scenarios)
        assert abs(p_hat - alpha) < 3 * se


def test_service_replay_bitwise(tmp_path):
    """200 random events: snapshot == fresh replay; denials keep versions."""
    with Budget(10.0):
        app = create_app(tmp_path / "svc")
        client = TestClient(app)
        store: Store = app.state.store
        rng = np.random.default_rng(99)

        # Small but realistic price histories.
        for j, asset in enumerate(("AA", "BB", "CC")):
            rets = rng.normal(2e-4, 0.02, size=60)
            client.put(f"/v1/assets/{asset}/prices",
                       content=csv_from_returns(rets.tolist()))

        n_portfolios = 6
        for i in range(n_portfolios):
            r = client.post("/v1/portfolios", json={
                "id": f"p{i}", "owner": f"o{i}",
                "capital": 5_000 + 1_000 * i,
                "positions": [{"asset": "AA", "amount": 1_000}],
                "policy": {"alpha": 0.01, "h": 0.2, "method": "normal"},
            })
            assert r.status_code == 201

        versions = {f"p{i}": 1 for i in range(n_portfolios)}
        while store.next_seq <= 200:
            pid = f"p{int(rng.integers(n_portfolios))}"
            roll = rng.random()
            if roll < 0.75:
                asset = ("AA", "BB", "CC")[int(rng.integers(3))]
                # Large amounts force a margin denial.
                amount = float(rng.choice([200.0, 400.0, 80_000.0]))
                r = client.post(f"/v1/portfolios/{pid}/trades", json={
                    "trade": {"asset": asset, "amount": amount},
                    "expected_version": versions[pid],
                })
                if r.status_code == 201:
                    versions[pid] += 1
                else:
                    assert r.status_code == 409  # denied
                    got = client.get(f"/v1/portfolios/{pid}").json()
                    assert got["version"] == versions[pid]
            else:
                r = client.put(f"/v1/portfolios/{pid}/policy", json={
                    "expected_version": versions[pid],
                    "policy": {"alpha": 0.01, "h": 0.2, "method": "normal",
                               "seed": int(rng.integers(100))},
                })
                assert r.status_code == 200
                versions[pid] += 1

        for pid, v in versions.items():
            assert client.get(f"/v1/portfolios/{pid}").json()["version"] == v

        replay_dir = tmp_path / "replay"
        replay_dir.mkdir()
        shutil.copy(store.log_path, replay_dir / "events.jsonl")
        fresh = Store(replay_dir)
        assert fresh.state_bytes() == store.state_bytes()
        snapshot = json.loads(store.snapshot_path.read_text())
        assert snapshot["state"] == fresh.canonical_state()
        assert snapshot["last_seq"] == store.next_seq - 1
