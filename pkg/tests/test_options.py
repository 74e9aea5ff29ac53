"""Black-Scholes pricing against a quadrature oracle, and option scenarios."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from riskengine.errors import ExpiredWithinHorizon
from riskengine.options import (
    OptionSpec,
    annualize_vol,
    bs_price,
    option_return_scenarios,
)


def risk_neutral_price(kind, s0, k, t, r, vol):
    """Discounted expected payoff under the lognormal terminal density."""
    def payoff(z):
        st = s0 * math.exp((r - 0.5 * vol**2) * t + vol * math.sqrt(t) * z)
        inner = st - k if kind == "call" else k - st
        return max(inner, 0.0) * norm.pdf(z)

    integral, _ = quad(payoff, -12, 12, limit=200)
    return math.exp(-r * t) * integral


class TestBsPrice:
    def test_atm_call_and_put_vs_quadrature(self):
        call = OptionSpec("X", "call", 100, 1.0, 0.05, 0.2)
        put = OptionSpec("X", "put", 100, 1.0, 0.05, 0.2)
        c, p = bs_price(call, 100.0), bs_price(put, 100.0)
        assert c == pytest.approx(
            risk_neutral_price("call", 100, 100, 1.0, 0.05, 0.2), abs=1e-6
        )
        assert p == pytest.approx(
            risk_neutral_price("put", 100, 100, 1.0, 0.05, 0.2), abs=1e-6
        )
        assert c == pytest.approx(10.4506, abs=1e-3)
        assert p == pytest.approx(5.5735, abs=1e-3)

    def test_zero_vol_is_deterministic_forward(self):
        call = OptionSpec("X", "call", 80, 1.0, 0.0, 0.0)
        put = OptionSpec("X", "put", 80, 1.0, 0.0, 0.0)
        assert bs_price(call, 100.0) == pytest.approx(20.0, rel=1e-12)
        assert bs_price(put, 100.0) == 0.0

    def test_put_call_parity(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            s = float(rng.uniform(5, 300))
            k = float(rng.uniform(5, 300))
            t = float(rng.uniform(0.05, 3))
            r = float(rng.uniform(0, 0.12))
            vol = float(rng.uniform(0.01, 0.9))
            c = bs_price(OptionSpec("X", "call", k, t, r, vol), s)
            p = bs_price(OptionSpec("X", "put", k, t, r, vol), s)
            assert c - p == pytest.approx(s - k * math.exp(-r * t), abs=1e-10)

    def test_call_increasing_put_decreasing_in_spot(self):
        spots = np.linspace(40, 220, 60)
        call = OptionSpec("X", "call", 100, 0.8, 0.05, 0.3)
        put = OptionSpec("X", "put", 100, 0.8, 0.05, 0.3)
        cs = [bs_price(call, s) for s in spots]
        ps = [bs_price(put, s) for s in spots]
        assert all(b > a for a, b in zip(cs, cs[1:]))
        assert all(b < a for a, b in zip(ps, ps[1:]))

    def test_vega_nonnegative(self):
        vols = np.linspace(0.0, 1.2, 40)
        for kind in ("call", "put"):
            prices = [
                bs_price(OptionSpec("X", kind, 95, 0.5, 0.03, v), 100.0)
                for v in vols
            ]
            assert all(b >= a - 1e-12 for a, b in zip(prices, prices[1:]))

    def test_rejects_bad_spot(self):
        with pytest.raises(ValueError):
            bs_price(OptionSpec("X", "call", 100, 1, 0.0, 0.2), 0.0)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            OptionSpec("X", "straddle", 100, 1, 0.0, 0.2)
        with pytest.raises(ValueError):
            OptionSpec("X", "call", -1, 1, 0.0, 0.2)
        with pytest.raises(ValueError):
            OptionSpec("X", "call", 100, 0, 0.0, 0.2)


class TestOptionReturnScenarios:
    SPEC = OptionSpec("IGV", "put", 0.85, 10 / 12, 0.10, 0.5)

    def test_flat_scenarios_zero_horizon(self):
        rets = option_return_scenarios(self.SPEC, 0.85, np.zeros(5),
                                       holding_days=0)
        np.testing.assert_array_equal(rets, np.zeros(5))

    def test_put_moves_against_underlying(self):
        # Deep ITM put, tiny vol: repricing must move opposite to the spot.
        spec = OptionSpec("X", "put", 200, 0.5, 0.02, 0.05)
        underlying = np.array([-0.05, -0.01, 0.0, 0.01, 0.05])
        rets = option_return_scenarios(spec, 100.0, underlying, 1)
        assert all(b < a for a, b in zip(rets, rets[1:]))
        assert rets[0] > 0 > rets[-1]
        # Oracle: direct bs_price at the shifted spots, shifted expiry.
        t1 = 0.5 - 1 / 252
        v0 = bs_price(spec, 100.0)
        for r, got in zip(underlying, rets):
            spec1 = OptionSpec("X", "put", 200, t1, 0.02, 0.05)
            assert got == pytest.approx(
                bs_price(spec1, 100.0 * (1 + r)) / v0 - 1, rel=1e-12
            )

    def test_elementwise_permutation(self):
        rng = np.random.default_rng(2)
        u = rng.normal(0, 0.03, size=50)
        perm = rng.permutation(50)
        base = option_return_scenarios(self.SPEC, 0.85, u, 1)
        permuted = option_return_scenarios(self.SPEC, 0.85, u[perm], 1)
        np.testing.assert_array_equal(base[perm], permuted)

    def test_expiring_within_horizon(self):
        spec = OptionSpec("X", "call", 100, 1 / 252, 0.0, 0.2)
        with pytest.raises(ExpiredWithinHorizon):
            option_return_scenarios(spec, 100.0, np.zeros(3), 1)

    def test_ruinous_underlying_move(self):
        # A simulated return below -100% leaves the put at discounted strike.
        rets = option_return_scenarios(self.SPEC, 0.85, np.array([-1.5]), 1)
        t1 = self.SPEC.expiry_years - 1 / 252
        expected = (self.SPEC.strike * math.exp(-0.10 * t1)
                    / bs_price(self.SPEC, 0.85)) - 1
        assert rets[0] == pytest.approx(expected, rel=1e-12)


def test_annualize_vol():
    assert annualize_vol(0.02) == pytest.approx(0.02 * math.sqrt(252),
                                                rel=1e-15)
