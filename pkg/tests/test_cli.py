"""Command-line interface: goldens, exit codes, service parity."""

import json
import math
import re

import pytest
from fastapi.testclient import TestClient

from riskengine.cli import EXIT_DENIED, EXIT_INPUT_ERROR, EXIT_OK, main
from riskengine.service import create_app

from conftest import csv_from_returns, demo_history, example32_history


def write_prices(tmp_path, csvs):
    d = tmp_path / "prices"
    d.mkdir(exist_ok=True)
    for asset, text in csvs.items():
        (d / f"{asset}.csv").write_text(text)
    return d


def write_json(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


@pytest.fixture()
def riskmetrics_setup(tmp_path):
    """Two-return history with sample mu = 0 and sigma_d = 0.0053 exactly."""
    x = 0.0053 / math.sqrt(2.0)
    prices = write_prices(tmp_path, {"DEMUSD": csv_from_returns([x, -x])})
    pf = write_json(tmp_path, "pf.json", {
        "capital": 10_000_000,
        "positions": [{"asset": "DEMUSD", "amount": 10_000_000}],
        "policy": {"alpha": 0.05, "h": 0.2, "method": "normal"},
    })
    return prices, pf


def run(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, out


class TestVarCommand:
    def test_one_day_var_exact(self, capsys, riskmetrics_setup):
        prices, pf = riskmetrics_setup
        rc, out = run(capsys, [
            "var", "--prices", str(prices), "--portfolio", str(pf),
            "--alpha", "0.05", "--method", "normal", "--z-override", "1.65",
        ])
        assert rc == EXIT_OK
        assert '"var_currency": 87450.0000' in out

    def test_ten_day_var(self, capsys, riskmetrics_setup):
        prices, pf = riskmetrics_setup
        rc, out = run(capsys, [
            "var", "--prices", str(prices), "--portfolio", str(pf),
            "--alpha", "0.05", "--method", "normal", "--z-override", "1.65",
            "--horizon", "10",
        ])
        assert rc == EXIT_OK
        value = float(re.search(r'"var_currency": ([\d.]+)', out).group(1))
        assert value == pytest.approx(276_541, abs=1.0)

    def test_es_command_reports_both(self, capsys, riskmetrics_setup):
        prices, pf = riskmetrics_setup
        rc, out = run(capsys, [
            "es", "--prices", str(prices), "--portfolio", str(pf),
            "--alpha", "0.05", "--method", "normal",
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert body["es"] >= body["var"]
        assert body["measure"] == "es"

    def test_missing_portfolio_file_exits_2(self, capsys, riskmetrics_setup):
        prices, _ = riskmetrics_setup
        rc, _out = run(capsys, [
            "var", "--prices", str(prices), "--portfolio", "/nope.json",
        ])
        assert rc == EXIT_INPUT_ERROR

    def test_seeded_monte_carlo_is_reproducible(self, capsys, tmp_path):
        prices = write_prices(tmp_path, demo_history())
        pf = write_json(tmp_path, "pf.json", {
            "capital": 10_000,
            "positions": [{"asset": "ISP", "amount": 4000},
                          {"asset": "ENI", "amount": 6000}],
            "policy": {"alpha": 0.01, "h": 0.2, "method": "monte_carlo",
                       "seed": 3, "scenarios": 50_000},
        })
        argv = ["var", "--prices", str(prices), "--portfolio", str(pf)]
        _, out1 = run(capsys, argv)
        _, out2 = run(capsys, argv)
        assert out1 == out2


@pytest.fixture(scope="module")
def ex32_csvs():
    return example32_history()


class TestMarginCommand:
    def pf_payload(self):
        return {
            "capital": 10_000,
            "positions": [{"asset": "ISP", "amount": 6000},
                          {"asset": "IGV", "amount": 21000},
                          {"asset": "GEN", "amount": 3000}],
            "policy": {"alpha": 0.001, "h": 0.2, "method": "normal"},
        }

    def test_first_portfolio_margin_factor(self, capsys, tmp_path, ex32_csvs):
        prices = write_prices(tmp_path, ex32_csvs)
        pf = write_json(tmp_path, "pf.json", self.pf_payload())
        rc, out = run(capsys, [
            "margin", "--prices", str(prices), "--portfolio", str(pf),
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert body["verdict"] == "allowed"
        assert body["var"] == pytest.approx(0.0804, abs=2e-4)
        assert body["a_star"] == pytest.approx(0.2867, abs=5e-4)
        assert body["availability"] == pytest.approx(1399, abs=6)

    def test_diversifying_trade_allowed(self, capsys, tmp_path, ex32_csvs):
        prices = write_prices(tmp_path, ex32_csvs)
        pf = write_json(tmp_path, "pf.json", self.pf_payload())
        trade = write_json(tmp_path, "trade.json",
                           {"asset": "ENI", "amount": 10_000})
        rc, out = run(capsys, [
            "margin", "--prices", str(prices), "--portfolio", str(pf),
            "--trade", str(trade),
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert body["var"] < 0.0804  # diversification lowered the VaR

    def test_denied_trade_exits_3(self, capsys, tmp_path, ex32_csvs):
        prices = write_prices(tmp_path, ex32_csvs)
        pf = write_json(tmp_path, "pf.json", self.pf_payload())
        trade = write_json(tmp_path, "trade.json",
                           {"asset": "ENI", "amount": 15_000})
        rc, out = run(capsys, [
            "margin", "--prices", str(prices), "--portfolio", str(pf),
            "--trade", str(trade),
        ])
        assert rc == EXIT_DENIED
        assert json.loads(out)["verdict"] == "denied"

    def test_riskless_portfolio_margin_zero(self, capsys, tmp_path):
        prices = write_prices(
            tmp_path, {"FLAT": csv_from_returns([0.0, 0.0, 0.0, 0.0])})
        pf = write_json(tmp_path, "pf.json", {
            "capital": 1000,
            "positions": [{"asset": "FLAT", "amount": 900}],
            "policy": {"alpha": 0.05, "h": 0.2, "method": "normal"},
        })
        rc, out = run(capsys, [
            "margin", "--prices", str(prices), "--portfolio", str(pf),
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert body["a_star"] == 0.0
        assert body["verdict"] == "allowed"


class TestLeverageCommand:
    def setup_files(self, tmp_path):
        prices = write_prices(tmp_path, demo_history())
        pf = write_json(tmp_path, "pf.json", {
            "capital": 10_000,
            "positions": [{"asset": "ISP", "amount": 1000, "leverage": 3},
                          {"asset": "IGV", "amount": 2000, "leverage": 2},
                          {"asset": "ENI", "amount": 1000}],
            "policy": {"alpha": 0.01, "h": 0.2, "method": "normal"},
        })
        return prices, pf

    def test_single_mode(self, capsys, tmp_path):
        prices, pf = self.setup_files(tmp_path)
        rc, out = run(capsys, [
            "leverage", "--prices", str(prices), "--portfolio", str(pf),
            "--mode", "single",
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert len(body["rows"]) == 3
        assert all(r["l_max"] > 1 for r in body["rows"])

    def test_sequential_mode_tracks_client_factors(self, capsys, tmp_path):
        prices, pf = self.setup_files(tmp_path)
        rc, out = run(capsys, [
            "leverage", "--prices", str(prices), "--portfolio", str(pf),
            "--mode", "sequential",
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        rows = body["rows"]
        assert [r["asset"] for r in rows] == ["ISP", "IGV", "ENI"]
        assert all(r["status"] == "ok" for r in rows)
        # Each step uses the client's factor, so the chain is decreasing
        # in available budget: later bound <= what it would be alone.
        assert rows[1]["l_max"] < json.loads(
            run(capsys, ["leverage", "--prices", str(prices), "--portfolio",
                         str(pf), "--mode", "single", "--asset", "IGV"])[1]
        )["rows"][0]["l_max"] * 10  # sanity: same magnitude

    def test_optimize_mode(self, capsys, tmp_path):
        prices, pf = self.setup_files(tmp_path)
        rc, out = run(capsys, [
            "leverage", "--prices", str(prices), "--portfolio", str(pf),
            "--mode", "optimize", "--alpha", "0.01",
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert body["status"] == "ok"
        assert body["portfolio_var"] <= 1 + 1e-6
        assert len(body["rows"]) == 3

    def test_text_format(self, capsys, tmp_path):
        prices, pf = self.setup_files(tmp_path)
        rc, out = run(capsys, [
            "leverage", "--prices", str(prices), "--portfolio", str(pf),
            "--mode", "single", "--format", "text",
        ])
        assert rc == EXIT_OK
        assert "asset" in out.splitlines()[0]
        assert "ISP" in out


class TestBacktestCommand:
    def saturated_amounts(self, prices_dir, alpha, h):
        """Amounts w = x * C/a, saturating the availability like Example 3.5."""
        import numpy as np

        from riskengine.margining import margin_factor
        from riskengine.marketdata import panel_slice
        from riskengine.measures import NormalParams, var_normal
        from riskengine.portfolios import build_market, load_price_dir
        from riskengine.scenarios import fit_normal

        series = load_price_dir(prices_dir)
        market = build_market(series, ["ISP", "IGV", "GEN"])
        model = fit_normal(
            panel_slice(market.panel, 0, market.panel.n_dates // 2))
        x = np.array([0.3, 0.3, 0.4])
        sig = float(np.sqrt(x @ model.sigma @ x))
        var = var_normal(NormalParams(float(model.mu @ x), sig), alpha)
        a = margin_factor(max(var, 0.0), h)
        return (10_000.0 / a) * x

    def test_reports_diagnostics_at_saturation(self, capsys, tmp_path):
        alpha, h = 0.05, 0.1
        prices = write_prices(tmp_path, demo_history())
        amounts = self.saturated_amounts(prices, alpha, h)
        pf = write_json(tmp_path, "pf.json", {
            "capital": 10_000,
            "positions": [
                {"asset": "ISP", "amount": amounts[0], "leverage": 2},
                {"asset": "IGV", "amount": amounts[1]},
                {"asset": "GEN", "amount": amounts[2], "leverage": 3},
            ],
            "policy": {"alpha": alpha, "h": h, "method": "normal"},
        })
        rc, out = run(capsys, [
            "backtest", "--prices", str(prices), "--portfolio", str(pf),
            "--alpha", str(alpha), "--h", str(h),
        ])
        body = json.loads(out)
        assert rc == EXIT_OK
        assert body["rows_calibration"] + body["rows_backtest"] == \
            body["rows_total"]
        assert body["rows_calibration"] == body["rows_total"] // 2
        assert body["levered_quantile"] < 0
        assert body["initial_availability"] == pytest.approx(0.0, abs=1.0)
        # Saturated account: the availability quantile diagnostic sits
        # near h (wide band; only 252 backtest observations).
        assert 0.4 * h < body["h_emp"] < 2.0 * h
        assert isinstance(body["availability_breaches"], int)

    def test_split_ratio(self, capsys, tmp_path):
        prices = write_prices(tmp_path, demo_history())
        pf = write_json(tmp_path, "pf.json", {
            "capital": 10_000,
            "positions": [{"asset": "ISP", "amount": 5000}],
            "policy": {"alpha": 0.05, "h": 0.2, "method": "normal"},
        })
        rc, out = run(capsys, [
            "backtest", "--prices", str(prices), "--portfolio", str(pf),
            "--split", "0.75",
        ])
        body = json.loads(out)
        assert body["rows_calibration"] == int(body["rows_total"] * 0.75)


class TestServiceParity:
    def test_margin_numbers_match_whatif(self, capsys, tmp_path, demo_csvs):
        prices = write_prices(tmp_path, demo_csvs)
        pf_payload = {
            "capital": 10_000,
            "positions": [{"asset": "ISP", "amount": 6000},
                          {"asset": "IGV", "amount": 21000},
                          {"asset": "GEN", "amount": 3000}],
            "policy": {"alpha": 0.001, "h": 0.2, "method": "normal"},
        }
        pf = write_json(tmp_path, "pf.json", pf_payload)
        trade = write_json(tmp_path, "trade.json",
                           {"asset": "ENI", "amount": 10_000})
        rc, out = run(capsys, [
            "margin", "--prices", str(prices), "--portfolio", str(pf),
            "--trade", str(trade),
        ])
        assert rc == EXIT_OK

        app = create_app(tmp_path / "svc")
        client = TestClient(app)
        for asset, text in demo_csvs.items():
            client.put(f"/v1/assets/{asset}/prices", content=text)
        client.post("/v1/portfolios", json={"id": "p", **pf_payload})
        w = client.post("/v1/portfolios/p/whatif",
                        json={"trade": {"asset": "ENI", "amount": 10_000}})

        # Shared engine: the serialized numbers are string-identical.
        cli_a = re.search(r'"a_star": (-?\d+\.\d{4})', out).group(1)
        cli_m = re.search(r'"availability": (-?\d+\.\d{4})', out).group(1)
        svc_a = re.search(r'"new_margin_factor":(-?\d+\.\d{4})', w.text).group(1)
        svc_m = re.search(r'"new_availability":(-?\d+\.\d{4})', w.text).group(1)
        assert cli_a == svc_a
        assert cli_m == svc_m
        cli_var = json.loads(out)["var"]
        assert cli_var == w.json()["portfolio_var"]
