import datetime as dt
import json

import numpy as np
import pytest

import oracles
from conftest import SMALL_START, small_config, small_data
from multihedge.backtest import (
    ZERO_COSTS,
    CostModel,
    PortfolioState,
    Quotes,
    execute_orders,
    run_backtest,
    run_baseline,
    run_per_asset,
)
from multihedge.errors import ConfigError, DataError, InternalError
from multihedge.hedge_agents import HedgeAction, Order
from multihedge.market_data import PriceSeries, business_days, compute_features
from multihedge.option_pricing import OptionContract, year_fraction

TODAY = dt.date(2021, 3, 1)
Q = Quotes(TODAY, {"X": 50.0}, {"X": 0.2})


def _dump(records):
    return [json.dumps(r.to_dict(), sort_keys=True) for r in records]


def test_equity_fill_cost():
    st = PortfolioState(cash=100_000.0)
    new, fills, cost = execute_orders(st, [("X", HedgeAction("delta_neutral", [Order("X", 100)]))], 0.0, Q,
                                      CostModel(5.0, 0.65, 10.0), 1.0, {"X": 1e12})
    assert st.cash - new.cash == pytest.approx(5000 + 2.50)
    assert cost == pytest.approx(2.5) and new.hedge_positions["X"] == 100


def test_option_fill_cost():
    c = OptionContract("X", "put", 40.0, dt.date(2021, 6, 1))
    mark = Q.option_mark(c)
    st = PortfolioState(cash=100_000.0)
    new, fills, cost = execute_orders(st, [("X", HedgeAction("collar", [Order(c, 10)]))], 0.0, Q,
                                      CostModel(5.0, 0.65, 10.0), 1.0, {"X": 1e12})
    notional = 10 * 100 * mark
    assert st.cash - new.cash == pytest.approx(notional + 6.50 + notional * 1e-3)
    assert fills[0].price == pytest.approx(mark)


def test_option_fee_arithmetic():
    # 10 contracts x 0.65 plus 10 bps of 2000 premium notional
    assert CostModel().option_cost(10, 2000.0) == pytest.approx(6.50 + 2.00)
    assert CostModel(option_bps=1.0).option_cost(10, 2000.0) == pytest.approx(6.70)
    assert CostModel().equity_cost(5000.0) == pytest.approx(2.50)


def test_liquidity_cap_scales_pro_rata():
    c = OptionContract("X", "call", 50.0, dt.date(2021, 6, 1))
    unit = Q.option_mark(c) * 100
    orders = [Order("X", 1000), Order(c, 10)]
    requested = 1000 * 50.0 + 10 * unit
    st = PortfolioState(cash=1e7)
    new, fills, _ = execute_orders(st, [("X", HedgeAction("delta_neutral", orders))], 0.0, Q, ZERO_COSTS,
                                   0.4, {"X": requested})
    q = {f.instrument: f.quantity for f in fills}
    assert q["X"] == pytest.approx(400.0) and q[c.label()] == 4


def test_basket_trade_to_target():
    st = PortfolioState(cash=100_000.0, prices={"X": 50.0})
    new, _, _ = execute_orders(st, [], 0.8, Q, ZERO_COSTS, 1.0, {"X": 1e12})
    assert new.equity_positions["X"] == pytest.approx(1600.0)


def test_margin_floor_scales_purchases():
    st = PortfolioState(cash=10_000.0)
    new, _, _ = execute_orders(st, [("X", HedgeAction("delta_neutral", [Order("X", 1000)]))], 0.0, Q, ZERO_COSTS,
                               1.0, {"X": 1e12}, margin_floor=0.10, portfolio_value=10_000.0)
    assert new.cash == pytest.approx(-1000.0)


def test_unpriceable_instrument():
    with pytest.raises(InternalError):
        execute_orders(PortfolioState(cash=1.0), [("Y", HedgeAction("delta_neutral", [Order("Y", 1)]))], 0.0, Q,
                       ZERO_COSTS, 1.0, {"X": 1.0})


def _flat(price=100.0, n=460):
    return PriceSeries.from_closes("SYN", business_days(SMALL_START, n), [price] * n, volume=1e9)


def test_flat_market_identity():
    records, rep = run_backtest(small_config(costs=ZERO_COSTS), {"SYN": _flat()})
    assert all(r.value == pytest.approx(1e6, abs=1e-6) for r in records)
    assert rep.tr_pct == pytest.approx(0.0, abs=1e-9) and rep.md_pct == pytest.approx(0.0, abs=1e-9)


def test_zero_cost_dominates_every_day():
    for seed in (0, 3):
        data = small_data(seed)
        costed, _ = run_backtest(small_config(seed=seed), data)
        free, _ = run_backtest(small_config(seed=seed, costs=ZERO_COSTS), data)
        assert all(f.value >= c.value - 1e-9 for f, c in zip(free, costed))


def test_determinism():
    data = small_data(1)
    for controller in ("heuristic", "stochastic"):
        cfg = small_config(seed=1, controller=controller, temperature=0.7)
        assert _dump(run_backtest(cfg, data)[0]) == _dump(run_backtest(cfg, data)[0])


def _check_accounting(records, data, capital=1e6):
    """Day-over-day P&L identity plus an independent revaluation of every position."""
    series = next(iter(data.values()))
    prev = capital
    for r in records:
        assert r.value - prev == pytest.approx(r.equity_pnl + r.option_pnl - r.costs, abs=1e-6)
        t = series.index_of[r.date]
        spot = series.closes[t]
        vol = compute_features(series, t).realized_vol_21d
        opt = 0.0
        for pos in r.positions:
            sym, kind, strike, expiry, mult = pos["instrument"].split(":")
            exp = dt.date.fromisoformat(expiry)
            tau = year_fraction(r.date, exp)
            m = oracles.bs_price(spot, float(strike), tau, vol, 0.0, kind)
            assert m == pytest.approx(pos["mark"], abs=1e-6)
            opt += pos["contracts"] * int(mult) * m
        shares = sum(r.shares.values())
        assert r.cash + shares * spot + opt == pytest.approx(r.value, abs=1e-6)
        prev = r.value


def test_accounting_identity_every_day():
    for seed in (0, 2):
        data = small_data(seed)
        _check_accounting(run_backtest(small_config(seed=seed), data)[0], data)


def test_no_lookahead_under_truncation():
    data = small_data(4)
    full, _ = run_backtest(small_config(seed=4), data)
    series = data["SYN"]
    rng = np.random.default_rng(8)
    eval_dates = [r.date for r in full]
    for cut in sorted(rng.choice(len(eval_dates) - 2, size=3, replace=False) + 1):
        end = series.index_of[eval_dates[cut]]
        short = {"SYN": PriceSeries("SYN", series.bars[: end + 1])}
        part, _ = run_backtest(small_config(seed=4), short)
        assert len(part) == cut + 1
        assert _dump(part) == _dump(full[: cut + 1])


def test_memory_off_never_retrieves():
    records, _ = run_backtest(small_config(memory_enabled=False), small_data(0))
    assert sum(r.retrieval_calls for r in records) == 0 and all(r.retrieved == 0 for r in records)
    records, _ = run_backtest(small_config(), small_data(0))
    assert all(r.retrieval_calls == 1 for r in records) and max(r.retrieved for r in records) == 5


def test_safety_disabled_has_no_verdicts():
    records, _ = run_backtest(small_config(safety_enabled=False), small_data(0))
    assert all(r.safety is None and r.decision.source != "override" for r in records)


def test_decisions_always_feasible():
    records, _ = run_backtest(small_config(controller="stochastic", temperature=0.7), small_data(5))
    assert all(r.decision.is_valid() for r in records)


def _doubling(n=460, symbol="SYN"):
    dates = business_days(SMALL_START, n)
    cfg = small_config(costs=ZERO_COSTS)
    ev = [i for i, d in enumerate(dates) if cfg.eval_start <= d <= cfg.eval_end]
    closes = np.full(n, 50.0)
    closes[ev] = 50.0 * 2.0 ** ((np.arange(len(ev))) / (len(ev) - 1))
    closes[ev[-1] + 1:] = 100.0
    return PriceSeries.from_closes(symbol, dates, closes.tolist(), volume=1e9)


def test_buy_and_hold_total_return():
    records, rep = run_baseline("buy_and_hold", small_config(costs=ZERO_COSTS), {"SYN": _doubling()})
    assert rep.tr_pct == pytest.approx(100.0, abs=1e-9)
    assert all(r.costs == 0 for r in records[1:]) and records[0].orders
    assert all(not r.orders for r in records[1:])


def test_buy_and_hold_costs_only_on_day_one():
    records, _ = run_baseline("buy_and_hold", small_config(), small_data(0))
    assert records[0].costs > 0 and all(r.costs == 0 for r in records[1:])


def test_equal_weight_blend_and_schedule():
    data = {"A": PriceSeries("A", _flat().bars), "B": _doubling(symbol="B")}
    cfg = small_config(costs=ZERO_COSTS, symbols=("A", "B"))
    records, rep = run_baseline("equal_weight", cfg, data)
    assert 0.0 < rep.tr_pct < 100.0
    months = set()
    for prev, r in zip([None] + records[:-1], records):
        first_of_month = prev is None or (prev.date.year, prev.date.month) != (r.date.year, r.date.month)
        assert bool(r.orders) <= first_of_month
        if r.orders:
            months.add((r.date.year, r.date.month))
    assert len(months) == 9


def test_unknown_baseline():
    with pytest.raises(ConfigError):
        run_baseline("momentum", small_config(), small_data(0))


def test_data_gap_names_the_date():
    a = small_data(0, "A")["A"]
    b = small_data(1, "B")["B"]
    gap_day = dt.date(2020, 3, 10)
    b = PriceSeries("B", tuple(bar for bar in b.bars if bar.date != gap_day))
    with pytest.raises(DataError, match="2020-03-10"):
        run_backtest(small_config(symbols=("A", "B")), {"A": a, "B": b})


def test_missing_symbol():
    with pytest.raises(DataError):
        run_backtest(small_config(symbols=("NOPE",)), small_data(0))


def test_invalid_config():
    with pytest.raises(ConfigError):
        run_backtest(small_config(calib_end=dt.date(2020, 2, 1)), small_data(0))
    with pytest.raises(ConfigError):
        run_backtest(small_config(controller="llm"), small_data(0))


def test_per_asset_mode():
    data = {**small_data(0, "A"), **small_data(1, "B")}
    cfg = small_config(symbols=("A", "B"), portfolio_mode="per_asset", memory_enabled=False)
    by_symbol, rep = run_per_asset(cfg, data)
    assert set(by_symbol) == {"A", "B"}
    assert by_symbol["A"][0].value <= 5e5
    total = [a.value + b.value for a, b in zip(by_symbol["A"], by_symbol["B"])]
    assert rep.tr_pct == pytest.approx((total[-1] / total[0] - 1) * 100)


def test_joint_two_symbols_accounting():
    data = {**small_data(0, "A"), **small_data(1, "B")}
    records, _ = run_backtest(small_config(symbols=("A", "B"), memory_enabled=False), data)
    prev = 1e6
    for r in records:
        assert r.value - prev == pytest.approx(r.equity_pnl + r.option_pnl - r.costs, abs=1e-6)
        prev = r.value
