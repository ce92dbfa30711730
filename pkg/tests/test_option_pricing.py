import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from multihedge.errors import DomainError
from multihedge.option_pricing import (
    OptionContract,
    PricingInputs,
    delta,
    mark,
    norm_cdf,
    payoff_at_expiry,
    price,
    year_fraction,
)

ATM = PricingInputs(100.0, 100.0, 1.0, 0.2, 0.0)


def test_atm_call_reference():
    assert price(ATM, "call") == pytest.approx(7.9656, abs=1e-3)
    assert price(ATM, "call") == pytest.approx(100 * (2 * oracles._N.cdf(0.1) - 1), abs=1e-12)


def test_atm_delta_reference():
    assert delta(ATM, "call") == pytest.approx(0.5398, abs=1e-3)


def test_intrinsic_at_expiry():
    assert price(PricingInputs(120, 100, 0.0, 0.0), "call") == 20.0
    assert price(PricingInputs(80, 100, 0.0, 0.0), "put") == 20.0
    assert price(PricingInputs(80, 100, 0.0, 0.0), "call") == 0.0


def test_deep_itm_delta():
    assert delta(PricingInputs(300, 100, 0.1, 0.2), "call") == pytest.approx(1.0, abs=1e-6)


def test_put_delta_is_call_minus_one():
    p = PricingInputs(97, 103, 0.4, 0.31, 0.02)
    assert delta(p, "put") - (delta(p, "call") - 1.0) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("bad", [dict(spot=0), dict(strike=-1), dict(time_to_expiry=-0.1), dict(volatility=-0.2)])
def test_domain_errors(bad):
    args = dict(spot=100.0, strike=100.0, time_to_expiry=1.0, volatility=0.2)
    args.update(bad)
    with pytest.raises(DomainError):
        PricingInputs(**args)


def test_unknown_kind():
    with pytest.raises(DomainError):
        price(ATM, "digital")


def _grid(n=1000, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield PricingInputs(
            float(rng.uniform(20, 300)), float(rng.uniform(20, 300)), float(rng.uniform(0.01, 3.0)),
            float(rng.uniform(0.05, 1.0)), float(rng.uniform(-0.02, 0.08)),
        )


def test_parity_grid():
    for p in _grid():
        lhs = price(p, "call") - price(p, "put")
        rhs = p.spot - p.strike * math.exp(-p.rate * p.time_to_expiry)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, p.spot)


def test_matches_normaldist_oracle():
    for p in _grid(300, seed=8):
        for kind in ("call", "put"):
            want = oracles.bs_price(p.spot, p.strike, p.time_to_expiry, p.volatility, p.rate, kind)
            assert price(p, kind) == pytest.approx(want, abs=1e-9)
            want_d = oracles.bs_delta(p.spot, p.strike, p.time_to_expiry, p.volatility, p.rate, kind)
            assert delta(p, kind) == pytest.approx(want_d, abs=1e-9)


def test_delta_central_differences():
    for p in _grid(1000, seed=9):
        h = 1e-4 * p.spot
        up = PricingInputs(p.spot + h, p.strike, p.time_to_expiry, p.volatility, p.rate)
        dn = PricingInputs(p.spot - h, p.strike, p.time_to_expiry, p.volatility, p.rate)
        for kind in ("call", "put"):
            fd = (price(up, kind) - price(dn, kind)) / (2 * h)
            assert abs(delta(p, kind) - fd) <= 1e-6


@given(st.floats(0.05, 0.9), st.floats(0.01, 0.5))
def test_price_increases_with_vol(vol, bump):
    lo = PricingInputs(100, 105, 0.5, vol)
    hi = PricingInputs(100, 105, 0.5, vol + bump)
    assert price(hi, "call") > price(lo, "call")
    assert price(hi, "put") > price(lo, "put")


@given(st.floats(1, 500), st.floats(1, 500), st.floats(0.0, 2.0), st.floats(0.0, 1.5))
def test_price_bounds(s, k, t, v):
    c = price(PricingInputs(s, k, t, v), "call")
    assert max(s - k, 0.0) - 1e-9 <= c <= s + 1e-9


def test_norm_cdf_symmetry():
    for x in np.linspace(-8, 8, 101):
        assert norm_cdf(x) + norm_cdf(-x) == pytest.approx(1.0, abs=1e-15)


def test_payoff_examples():
    exp = dt.date(2021, 3, 19)
    assert payoff_at_expiry(OptionContract("X", "call", 100, exp, 1), 110) == 1000
    assert payoff_at_expiry(OptionContract("X", "call", 110, exp, -1), 130) == -2000
    assert payoff_at_expiry(OptionContract("X", "put", 90, exp, 1), 120) == 0


def test_mark_uses_trading_day_clock():
    c = OptionContract("X", "put", 100, dt.date(2021, 1, 11))
    assert year_fraction(dt.date(2021, 1, 4), c.expiry) == pytest.approx(5 / 252)
    assert mark(c, 90, c.expiry, 0.3) == 10.0
