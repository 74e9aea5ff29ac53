"""Shared fixtures: synthetic price histories with known joint dynamics."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np
import pytest

from riskengine.scenarios import NormalModel, sample

_ACCEPTANCE_RESULTS: list[tuple[str, bool, float]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS.append((name, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, duration in _ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {name} ({duration:.2f}s)")


def csv_from_returns(returns, p0: float = 100.0, start=date(2015, 1, 2)) -> str:
    """Build a date,close CSV whose simple returns are exactly ``returns``."""
    lines = ["date,close"]
    price = float(p0)
    d = start
    lines.append(f"{d.isoformat()},{price!r}")
    for r in returns:
        d += timedelta(days=1)
        price = float(price * (1.0 + r))
        lines.append(f"{d.isoformat()},{price!r}")
    return "\n".join(lines) + "\n"


def correlated_history(asset_ids, mus, vols, corr, n_days: int, seed: int,
                       spots=None) -> dict[str, str]:
    """Price CSVs for assets with the given daily moments and correlation."""
    vols = np.asarray(vols, dtype=np.float64)
    corr = np.asarray(corr, dtype=np.float64)
    sigma = corr * np.outer(vols, vols)
    model = NormalModel(asset_ids, np.asarray(mus, dtype=np.float64), sigma)
    rets = sample(model, n_days, seed).matrix
    spots = spots or [100.0] * len(asset_ids)
    out = {}
    for j, a in enumerate(asset_ids):
        # Work back to an initial price that lands on the requested spot.
        growth = np.prod(1.0 + rets[:, j])
        out[a] = csv_from_returns(rets[:, j], p0=spots[j] / growth)
    return out


DEMO_ASSETS = ("ISP", "IGV", "GEN", "ENI")


def demo_history(seed: int = 2016, n_days: int = 504) -> dict[str, str]:
    """Four-asset history shaped like the margining walkthrough dataset.

    IGV is the volatile mid-cap the options examples are written on; ENI
    is the diversifier whose addition lowers portfolio VaR.
    """
    corr = np.array([
        [1.00, 0.35, 0.40, 0.25],
        [0.35, 1.00, 0.30, 0.15],
        [0.40, 0.30, 1.00, 0.30],
        [0.25, 0.15, 0.30, 1.00],
    ])
    return correlated_history(
        DEMO_ASSETS,
        mus=[1e-4, 2e-4, 5e-5, -7e-5],
        vols=[0.018, 0.034, 0.016, 0.019],
        corr=corr,
        n_days=n_days,
        seed=seed,
        spots=[2.50, 0.85, 14.0, 13.5],
    )


@pytest.fixture(scope="session")
def demo_csvs() -> dict[str, str]:
    return demo_history()


@pytest.fixture()
def demo_price_dir(tmp_path, demo_csvs):
    d = tmp_path / "prices"
    d.mkdir()
    for asset, text in demo_csvs.items():
        (d / f"{asset}.csv").write_text(text)
    return d


def example32_history(target_var: float = 0.0804, alpha: float = 0.001
                      ) -> dict[str, str]:
    """Demo history rescaled so the walkthrough portfolio's normal VaR at
    ``alpha`` is exactly ``target_var`` (0.2/0.7/0.1 in ISP/IGV/GEN).

    Scaling every return by a constant scales mu and sigma, hence the
    VaR, by the same constant.
    """
    from riskengine.marketdata import load_prices
    from riskengine.measures import NormalParams, var_normal
    from riskengine.portfolios import build_market

    csvs = demo_history()
    series = {a: load_prices(t, a) for a, t in csvs.items()}
    market = build_market(series, ["ISP", "IGV", "GEN"])
    x = np.array([0.2, 0.7, 0.1])
    mu = float(market.model.mu @ x)
    sig = float(np.sqrt(x @ market.model.sigma @ x))
    lam = target_var / var_normal(NormalParams(mu, sig), alpha)

    corr = np.array([
        [1.00, 0.35, 0.40, 0.25],
        [0.35, 1.00, 0.30, 0.15],
        [0.40, 0.30, 1.00, 0.30],
        [0.25, 0.15, 0.30, 1.00],
    ])
    return correlated_history(
        DEMO_ASSETS,
        mus=np.array([1e-4, 2e-4, 5e-5, -7e-5]) * lam,
        vols=np.array([0.018, 0.034, 0.016, 0.019]) * lam,
        corr=corr,
        n_days=504,
        seed=2016,
        spots=[2.50, 0.85, 14.0, 13.5],
    )
