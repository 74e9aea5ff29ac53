"""Portfolio file format and market assembly shared by the CLI and service.

A portfolio file is JSON:

    {
      "capital": 10000,
      "positions": [
        {"asset": "ISP", "amount": 6000},
        {"asset": "FCA", "amount": 7500, "leverage": 2},
        {"option": {"underlying": "IGV", "kind": "put",
                     "strike": "last", "expiry_years": 0.8333,
                     "rate": 0.10, "vol_annual": "fit"},
         "amount": 10000}
      ],
      "policy": {"alpha": 0.001, "h": 0.2, "method": "normal",
                  "seed": 0, "scenarios": 100000}
    }

Option fields accept the convenience markers ``"strike": "last"`` (strike
fixed to the underlying's latest close) and ``"vol_annual": "fit"``
(annualized from the fitted daily volatility); both resolve when the
trade is evaluated against a market view.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UnknownAsset
from .margining import AssetPosition, MarginPolicy, OptionPosition
from .marketdata import (
    AlignedReturnPanel,
    PriceSeries,
    align,
    load_prices,
    panel_slice,
    simple_returns,
)
from .options import OptionSpec, annualize_vol
from .scenarios import NormalModel, ScenarioSet, fit_normal


@dataclass(frozen=True)
class OptionRequest:
    """Option trade as written in a portfolio or trade file, pre-resolution."""

    underlying: str
    kind: str
    strike: float | str
    expiry_years: float
    rate: float
    vol_annual: float | str

    def resolve(self, model: NormalModel, spots: dict[str, float]) -> OptionSpec:
        if self.underlying not in spots:
            raise UnknownAsset(f"no spot price for underlying {self.underlying!r}")
        strike = spots[self.underlying] if self.strike == "last" else float(self.strike)
        if self.vol_annual == "fit":
            j = model.index_of(self.underlying)
            vol = annualize_vol(math.sqrt(max(model.sigma[j, j], 0.0)))
        else:
            vol = float(self.vol_annual)
        return OptionSpec(
            underlying_id=self.underlying,
            kind=self.kind,
            strike=strike,
            expiry_years=self.expiry_years,
            rate=self.rate,
            vol_annual=vol,
        )


@dataclass(frozen=True)
class PositionRequest:
    """One position entry: either an asset id or an option request."""

    amount: float
    asset: str | None = None
    option: OptionRequest | None = None
    leverage: float = 1.0

    def resolve(self, model: NormalModel, spots: dict[str, float]):
        if self.asset is not None:
            return AssetPosition(self.asset, self.amount, self.leverage)
        return OptionPosition(self.option.resolve(model, spots), self.amount)


@dataclass(frozen=True)
class PortfolioFile:
    capital: float
    positions: tuple[PositionRequest, ...]
    policy: MarginPolicy


def parse_position(entry: dict) -> PositionRequest:
    amount = float(entry["amount"])
    if "asset" in entry:
        return PositionRequest(
            amount=amount,
            asset=str(entry["asset"]),
            leverage=float(entry.get("leverage", 1.0)),
        )
    if "option" in entry:
        o = entry["option"]
        strike = o["strike"]
        vol = o.get("vol_annual", "fit")
        return PositionRequest(
            amount=amount,
            option=OptionRequest(
                underlying=str(o["underlying"]),
                kind=str(o["kind"]),
                strike=strike if strike == "last" else float(strike),
                expiry_years=float(o["expiry_years"]),
                rate=float(o.get("rate", 0.0)),
                vol_annual=vol if vol == "fit" else float(vol),
            ),
        )
    raise ValueError("position entry needs an 'asset' or 'option' field")


def parse_policy(entry: dict) -> MarginPolicy:
    return MarginPolicy(
        alpha=float(entry["alpha"]),
        h=float(entry["h"]),
        var_method=str(entry.get("method", "normal")),
        seed=int(entry.get("seed", 0)),
        n_scenarios=int(entry.get("scenarios", 100_000)),
    )


def parse_portfolio(data: dict) -> PortfolioFile:
    return PortfolioFile(
        capital=float(data["capital"]),
        positions=tuple(parse_position(e) for e in data.get("positions", [])),
        policy=parse_policy(data["policy"]),
    )


def load_portfolio(path: str | Path) -> PortfolioFile:
    with open(path, encoding="utf-8") as fh:
        return parse_portfolio(json.load(fh))


def load_price_dir(prices_dir: str | Path) -> dict[str, PriceSeries]:
    """Load every <ASSET>.csv under a directory into price series."""
    out: dict[str, PriceSeries] = {}
    for path in sorted(Path(prices_dir).glob("*.csv")):
        asset_id = path.stem
        out[asset_id] = load_prices(path.read_text(encoding="utf-8"), asset_id)
    return out


@dataclass(frozen=True)
class Market:
    """Fitted model plus the return panel and latest closes behind it."""

    model: NormalModel
    spots: dict[str, float]
    panel: AlignedReturnPanel
    historical: ScenarioSet
    window: int


def build_market(series: dict[str, PriceSeries], assets: list[str],
                 window: int | None = None) -> Market:
    """Fit a normal model for the requested assets from price history.

    ``window`` keeps only the most recent N joint return observations.
    The aligned panel doubles as the historical scenario set.
    """
    missing = [a for a in assets if a not in series]
    if missing:
        raise UnknownAsset(f"no price series for {missing}")
    returns = [simple_returns(series[a]) for a in assets]
    panel = align(returns)
    if window is not None and window < panel.n_dates:
        panel = panel_slice(panel, panel.n_dates - window, panel.n_dates)
    model = fit_normal(panel)
    spots = {a: series[a].closes[-1] for a in assets}
    historical = ScenarioSet(panel.asset_ids, panel.matrix, "historical")
    return Market(model=model, spots=spots, panel=panel, historical=historical,
                  window=panel.n_dates)
