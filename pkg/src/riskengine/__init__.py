"""Portfolio risk and margining engine.

Core capabilities:

* simple/log return series and aligned return panels (``marketdata``)
* VaR and expected shortfall: analytic normal, historical, Monte Carlo
  (``measures``, ``scenarios``)
* Black-Scholes pricing and full-revaluation option scenarios (``options``)
* maximum leverage factors and leverage optimization (``leverage``)
* margin factors, availability and trade approval (``margining``)
* an HTTP service (``service``) and a CLI (``cli``) over the same engine
"""

from .leverage import (
    LeverageBound,
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
    OptionPosition,
    TradeDecision,
    availability,
    eod_availability_scenarios,
    evaluate_trade,
    margin_factor,
    per_asset_margin,
)
from .marketdata import (
    AlignedReturnPanel,
    PriceSeries,
    ReturnSeries,
    align,
    compound,
    load_prices,
    log_returns,
    simple_returns,
)
from .measures import (
    DiscreteLoss,
    NormalParams,
    RiskReport,
    TailLevel,
    es_empirical,
    es_normal,
    scale_horizon,
    var_discrete,
    var_empirical,
    var_normal,
)
from .options import OptionSpec, bs_price, option_return_scenarios
from .scenarios import (
    NormalModel,
    ScenarioSet,
    cholesky,
    fit_normal,
    portfolio_scenarios,
    sample,
)

__version__ = "0.1.0"
