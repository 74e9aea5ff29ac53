"""Synthetic four-asset market shared by the demo scripts.

Daily simple returns are drawn from a seeded multivariate normal model, so
every demo is reproducible; prices are rebuilt so the latest closes land
on fixed spot levels.
"""

from datetime import date, timedelta

import numpy as np

from riskengine import NormalModel, sample
from riskengine.marketdata import PriceSeries

ASSETS = ("ISP", "IGV", "GEN", "ENI")
SPOTS = (2.50, 0.85, 14.0, 13.5)

_CORR = np.array([
    [1.00, 0.35, 0.40, 0.25],
    [0.35, 1.00, 0.30, 0.15],
    [0.40, 0.30, 1.00, 0.30],
    [0.25, 0.15, 0.30, 1.00],
])
_VOLS = np.array([0.018, 0.034, 0.016, 0.019])
_MUS = np.array([1e-4, 2e-4, 5e-5, -7e-5])


def price_series(n_days: int = 504, seed: int = 2016) -> dict[str, PriceSeries]:
    model = NormalModel(ASSETS, _MUS, _CORR * np.outer(_VOLS, _VOLS))
    rets = sample(model, n_days, seed).matrix
    out = {}
    start = date(2015, 1, 2)
    for j, asset in enumerate(ASSETS):
        growth = float(np.prod(1.0 + rets[:, j]))
        closes = [SPOTS[j] / growth]
        for r in rets[:, j]:
            closes.append(float(closes[-1] * (1.0 + r)))
        dates = tuple(start + timedelta(days=i) for i in range(len(closes)))
        out[asset] = PriceSeries(asset, dates, tuple(closes))
    return out


def price_csvs(n_days: int = 504, seed: int = 2016) -> dict[str, str]:
    out = {}
    for asset, ps in price_series(n_days, seed).items():
        rows = ["date,close"]
        rows += [f"{d.isoformat()},{c!r}" for d, c in zip(ps.dates, ps.closes)]
        out[asset] = "\n".join(rows) + "\n"
    return out
