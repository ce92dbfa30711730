"""Daily retrieve-reason-act-update loop with portfolio accounting.

Day order: mark-to-market, features, retrieval, controller, validation, safety,
sleeve agents, liquidity- and margin-capped execution, record, memory update.
Fills happen at the close (equity) or at the model mark (options), so trading
changes portfolio value only by the costs paid.
"""

from __future__ import annotations

import datetime as dt
import math
import os
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .allocation import (
    ControllerParams,
    DecisionConstraints,
    DecisionContext,
    Producer,
    classify_regime,
    heuristic_producer,
    llm_producer,
    stochastic_wrap,
    validate_decision,
)
from .decision import SLEEVES, AllocationDecision, RegimeLabel, cash_decision
from .episodic_memory import Episode, MemoryBuffer, clone_completed, embed, retrieve_top_k, store_and_backfill
from .errors import ConfigError, DataError, InternalError
from .hedge_agents import AgentParams, HedgeAction, collar_step, delta_neutral_step, straddle_step
from .market_data import LOOKBACK, MarketFeatures, PriceSeries, feature_matrix, stats_from_vectors
from .metrics import MetricsReport, compute_all
from .option_pricing import OptionContract, PricingInputs, mark, price, trading_days_between
from .safety import SafetyConfig, SafetyVerdict, check_and_override


@dataclass(frozen=True)
class CostModel:
    equity_bps: float = 5.0
    per_contract_fee: float = 0.65
    option_bps: float = 10.0

    def validate(self) -> None:
        if min(self.equity_bps, self.per_contract_fee, self.option_bps) < 0:
            raise ConfigError("costs must be non-negative")

    def equity_cost(self, notional: float) -> float:
        return abs(notional) * self.equity_bps * 1e-4

    def option_cost(self, contracts: float, premium_notional: float) -> float:
        return abs(contracts) * self.per_contract_fee + abs(premium_notional) * self.option_bps * 1e-4


ZERO_COSTS = CostModel(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MemoryConfig:
    k: int = 5
    retrieval_strength: float = 0.25
    horizon_days: int = 21


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str = ""
    timeout: float = 10.0
    api_key_env: str = ""


@dataclass(frozen=True)
class BacktestConfig:
    symbols: tuple[str, ...] = ("SYN",)
    calib_start: dt.date = dt.date(2016, 1, 1)
    calib_end: dt.date = dt.date(2020, 12, 31)
    eval_start: dt.date = dt.date(2021, 1, 1)
    eval_end: dt.date = dt.date(2023, 12, 31)
    initial_capital: float = 1_000_000.0
    controller: str = "heuristic"
    memory_enabled: bool = True
    safety_enabled: bool = True
    warm_start: bool = True
    seed: int = 0
    temperature: float = 0.0
    rate: float = 0.0
    margin_floor: float = 0.10
    rebalance_band: float = 0.01
    run_id: str = "run"
    portfolio_mode: str = "joint"
    costs: CostModel = field(default_factory=CostModel)
    constraints: DecisionConstraints = field(default_factory=DecisionConstraints)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    agents: AgentParams = field(default_factory=AgentParams)
    controller_params: ControllerParams = field(default_factory=ControllerParams)
    llm: LlmConfig = field(default_factory=LlmConfig)

    def validate(self) -> None:
        if not self.symbols:
            raise ConfigError("at least one symbol is required")
        if self.calib_start > self.calib_end or self.eval_start > self.eval_end:
            raise ConfigError("window start must not follow its end")
        if self.calib_end >= self.eval_start:
            raise ConfigError("calibration window must strictly precede the evaluation window")
        if self.initial_capital <= 0:
            raise ConfigError("initial_capital must be positive")
        if self.controller not in ("heuristic", "llm", "stochastic"):
            raise ConfigError(f"unknown controller kind {self.controller!r}")
        if self.portfolio_mode not in ("joint", "per_asset"):
            raise ConfigError(f"unknown portfolio_mode {self.portfolio_mode!r}")
        if self.controller == "llm" and not self.llm.endpoint:
            raise ConfigError("llm controller requires llm.endpoint")
        if self.temperature < 0 or self.margin_floor < 0 or self.rebalance_band < 0:
            raise ConfigError("temperature, margin_floor and rebalance_band must be non-negative")
        if self.memory.k < 1 or self.memory.retrieval_strength < 0 or self.memory.horizon_days < 1:
            raise ConfigError("invalid memory settings")
        self.costs.validate()
        self.constraints.validate()
        self.safety.validate()
        self.agents.validate()


# --------------------------------------------------------------------------- portfolio state


@dataclass
class PortfolioState:
    cash: float
    equity_positions: dict[str, float] = field(default_factory=dict)
    hedge_positions: dict[str, float] = field(default_factory=dict)
    option_positions: dict[tuple, tuple[str, OptionContract]] = field(default_factory=dict)
    equity_curve: list[tuple[dt.date, float]] = field(default_factory=list)
    running_peak: float = 0.0
    marks: dict[tuple, float] = field(default_factory=dict)
    prices: dict[str, float] = field(default_factory=dict)

    def copy(self) -> "PortfolioState":
        return PortfolioState(self.cash, dict(self.equity_positions), dict(self.hedge_positions),
                              dict(self.option_positions), self.equity_curve, self.running_peak,
                              dict(self.marks), dict(self.prices))

    def shares(self, symbol: str) -> float:
        return self.equity_positions.get(symbol, 0.0) + self.hedge_positions.get(symbol, 0.0)

    def legs(self, sleeve: str, symbol: str) -> list[OptionContract]:
        return [c for s, c in self.option_positions.values() if s == sleeve and c.underlying == symbol]

    def value(self) -> float:
        eq = sum(self.shares(s) * p for s, p in self.prices.items())
        opt = sum(c.contracts * c.multiplier * self.marks[k] for k, (_, c) in self.option_positions.items())
        return self.cash + eq + opt


@dataclass(frozen=True)
class Quotes:
    today: dt.date
    prices: Mapping[str, float]
    vols: Mapping[str, float]
    rate: float = 0.0

    def option_mark(self, c: OptionContract) -> float:
        return mark(c, self.prices[c.underlying], self.today, self.vols[c.underlying], self.rate)


@dataclass(frozen=True)
class Fill:
    sleeve: str
    instrument: str
    quantity: float
    price: float
    cost: float

    def to_dict(self) -> dict:
        return {"sleeve": self.sleeve, "instrument": self.instrument, "quantity": self.quantity,
                "price": self.price, "cost": self.cost}


@dataclass
class DailyRecord:
    date: dt.date
    value: float
    drawdown: float
    costs: float
    equity_pnl: float
    option_pnl: float
    cash: float
    decision: AllocationDecision | None = None
    safety: SafetyVerdict | None = None
    regime: RegimeLabel | None = None
    orders: list[Fill] = field(default_factory=list)
    retrieved: int = 0
    retrieval_calls: int = 0
    shares: dict = field(default_factory=dict)
    positions: list = field(default_factory=list)
    open_marks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "value": self.value,
            "drawdown": self.drawdown,
            "costs": self.costs,
            "equity_pnl": self.equity_pnl,
            "option_pnl": self.option_pnl,
            "cash": self.cash,
            "regime": None if self.regime is None else self.regime.value,
            "decision": None if self.decision is None else self.decision.to_dict(),
            "safety": None if self.safety is None else {"active": self.safety.active,
                                                          "trigger_drawdown": self.safety.trigger_drawdown},
            "orders": [f.to_dict() for f in self.orders],
            "retrieved": self.retrieved,
            "retrieval_calls": self.retrieval_calls,
            "shares": self.shares,
            "positions": self.positions,
            "open_marks": self.open_marks,
        }


# --------------------------------------------------------------------------- execution


def _option_key(sleeve: str, c: OptionContract) -> tuple:
    return (sleeve,) + c.key


def execute_orders(state: PortfolioState, actions: list[tuple[str, HedgeAction]], equity_target_exposure: float,
                   quotes: Quotes, costs: CostModel, liquidity_cap: float, avg_dollar_volume: Mapping[str, float],
                   margin_floor: float = 0.10, rebalance_band: float = 0.0,
                   portfolio_value: float | None = None) -> tuple[PortfolioState, list[Fill], float]:
    """Fill sleeve orders plus the basket trade toward ``equity_target_exposure``.

    Per symbol, traded notional (shares x price, contracts x multiplier x mark) is
    scaled pro-rata to ``liquidity_cap`` x average dollar volume. If cash would
    fall below ``-margin_floor`` x value, cash-consuming orders are scaled down.
    Option quantities are truncated toward zero after scaling.
    """
    value = state.value() if portfolio_value is None else portfolio_value
    symbols = list(quotes.prices)
    # (sleeve, symbol, instrument, qty, unit price (per share / per contract), is_option)
    pending: list[list] = []
    per_symbol_target = equity_target_exposure * value / len(symbols)
    for sym in symbols:
        p = quotes.prices[sym]
        diff = per_symbol_target / p - state.equity_positions.get(sym, 0.0)
        if abs(diff) * p > rebalance_band * value or (per_symbol_target == 0 and diff):
            pending.append(["basket", sym, sym, diff, p, False])
    for sym, action in actions:
        for o in action.orders:
            if o.quantity == 0:
                continue
            if o.is_option:
                c = o.instrument
                k = _option_key(action.sleeve, c)
                m = state.marks[k] if k in state.option_positions else quotes.option_mark(c)
                pending.append([action.sleeve, c.underlying, c, int(o.quantity), m * c.multiplier, True])
            else:
                if o.instrument not in quotes.prices:
                    raise InternalError(f"no quote for {o.instrument!r}")
                pending.append([action.sleeve, o.instrument, o.instrument, float(o.quantity),
                                quotes.prices[o.instrument], False])

    def trunc(q, scale, is_opt):
        return int(math.trunc(q * scale)) if is_opt else q * scale

    # liquidity cap per symbol
    for sym in symbols:
        rows = [r for r in pending if r[1] == sym]
        requested = sum(abs(r[3]) * r[4] for r in rows)
        cap = liquidity_cap * avg_dollar_volume.get(sym, 0.0)
        if requested > cap and requested > 0:
            scale = cap / requested
            for r in rows:
                r[3] = trunc(r[3], scale, r[5])

    def fill_cost(r) -> float:
        if r[5]:
            return costs.option_cost(r[3], r[3] * r[4])
        return costs.equity_cost(r[3] * r[4])

    # margin floor on cash
    floor = -margin_floor * value
    flows = [(-(r[3] * r[4]) - fill_cost(r)) for r in pending]
    after = state.cash + sum(flows)
    if after < floor:
        inflow = sum(f for f in flows if f >= 0)
        outflow = -sum(f for f in flows if f < 0)
        scale = max(0.0, min(1.0, (state.cash + inflow - floor) / outflow)) if outflow > 0 else 1.0
        for r, f in zip(pending, flows):
            if f < 0:
                r[3] = trunc(r[3], scale, r[5])

    new = state.copy()
    fills = []
    total_cost = 0.0
    for r in pending:
        sleeve, sym, inst, qty, unit, is_opt = r
        if qty == 0:
            continue
        cost = fill_cost(r)
        new.cash -= qty * unit + cost
        total_cost += cost
        if is_opt:
            k = _option_key(sleeve, inst)
            held = new.option_positions[k][1].contracts if k in new.option_positions else 0
            n = held + int(qty)
            if n == 0:
                new.option_positions.pop(k, None)
                new.marks.pop(k, None)
            else:
                new.option_positions[k] = (sleeve, inst.with_contracts(n))
                new.marks[k] = unit / inst.multiplier
            fills.append(Fill(sleeve, inst.label(), float(qty), unit / inst.multiplier, cost))
        else:
            book = new.equity_positions if sleeve == "basket" else new.hedge_positions
            book[sym] = book.get(sym, 0.0) + qty
            fills.append(Fill(sleeve, sym, float(qty), unit, cost))
    return new, fills, total_cost


# --------------------------------------------------------------------------- data alignment


@dataclass
class MarketView:
    """Symbol histories aligned on their common dates, with precomputed features."""

    symbols: tuple[str, ...]
    dates: list[dt.date]
    closes: np.ndarray            # (n_dates, n_symbols)
    dollar_volume_21d: np.ndarray  # trailing mean of close * volume
    symbol_vol: np.ndarray         # realized_vol_21d per symbol
    basket_features: np.ndarray   # scaled basket features per date
    position: dict[dt.date, int]

    def window(self, start: dt.date, end: dt.date) -> list[int]:
        return [i for i, d in enumerate(self.dates) if start <= d <= end]


def build_view(symbols, data: Mapping[str, PriceSeries], windows) -> MarketView:
    for s in symbols:
        if s not in data:
            raise DataError(f"no price data for symbol {s}")
    series = [data[s] for s in symbols]
    common = set(series[0].dates)
    for ps in series[1:]:
        common &= set(ps.dates)
    for start, end in windows:
        for ps in series:
            in_window = [d for d in ps.dates if start <= d <= end]
            if not in_window:
                raise DataError(f"{ps.symbol} has no data in window {start}..{end}")
        union = sorted({d for ps in series for d in ps.dates if start <= d <= end})
        for d in union:
            if d not in common:
                raise DataError(f"data gap on {d.isoformat()}: not every symbol has a bar")
    dates = sorted(common)
    n = len(dates)
    closes = np.empty((n, len(symbols)))
    dollar = np.empty((n, len(symbols)))
    svol = np.empty((n, len(symbols)))
    for j, ps in enumerate(series):
        idx = np.array([ps.index_of[d] for d in dates])
        closes[:, j] = ps.closes[idx]
        dv = ps.closes * ps.volumes
        c = np.concatenate([[0.0], np.cumsum(dv)])
        trailing = np.array([(c[i + 1] - c[max(0, i - 20)]) / (i + 1 - max(0, i - 20)) for i in range(len(dv))])
        dollar[:, j] = trailing[idx]
        svol[:, j] = feature_matrix(ps.closes)[idx, 3]
    if len(symbols) == 1:
        basket = closes[:, 0]
    else:
        rets = closes[1:] / closes[:-1] - 1.0
        basket = 100.0 * np.concatenate([[1.0], np.cumprod(1.0 + rets.mean(axis=1))])
    return MarketView(tuple(symbols), dates, closes, dollar, svol, feature_matrix(basket),
                      {d: i for i, d in enumerate(dates)})


# --------------------------------------------------------------------------- loop


def make_producer(config: BacktestConfig, kind: str | None = None, client=None) -> Producer:
    params = replace(config.controller_params, retrieval_strength=config.memory.retrieval_strength)
    base = heuristic_producer(params, config.constraints)
    kind = kind or config.controller
    if kind == "heuristic":
        return base
    if kind == "stochastic":
        return stochastic_wrap(base, config.temperature, config.seed)
    if kind == "llm":
        key = os.environ.get(config.llm.api_key_env) if config.llm.api_key_env else None
        return llm_producer(config.llm.endpoint, config.llm.timeout, base, config.constraints,
                            config.temperature, client=client, api_key=key)
    raise ConfigError(f"unknown controller kind {kind!r}")


def _features_at(view: MarketView, i: int, params: ControllerParams) -> tuple[MarketFeatures, RegimeLabel]:
    row = view.basket_features[i]
    if not np.all(np.isfinite(row)):
        raise ConfigError(f"{view.dates[i]}: fewer than {LOOKBACK} prior bars for features")
    raw = MarketFeatures(*row.tolist())
    regime = classify_regime(raw, params.vol_threshold, params.trend_threshold)
    return raw.with_regime(regime.index), regime


def _symbol_features(view: MarketView, i: int, j: int) -> MarketFeatures:
    # agents only consume the volatility field
    return MarketFeatures(0.0, 0.0, 0.0, float(view.symbol_vol[i, j]), 0.0, 0.0, 0.0)


def _sleeve_premiums(spot: float, vol: float, agents: AgentParams, rate: float) -> dict[str, float]:
    T = agents.tenor_days / 252.0
    def p(k, kind):
        return price(PricingInputs(spot, k, T, vol, rate), kind)
    ks = agents.straddle_strike_offset * spot
    straddle = p(ks, "call") + p(ks, "put")
    collar = max(p(agents.put_strike_offset * spot, "put") - p(agents.call_strike_offset * spot, "call"), 0.0)
    return {"collar": collar, "straddle": straddle, "delta_neutral": straddle}


def simulate(config: BacktestConfig, view: MarketView, days: list[int], producer: Producer,
             memory: MemoryBuffer | None, stats) -> list[DailyRecord]:
    """Run the control loop over ``days`` (indices into ``view``) from fresh capital."""
    symbols = view.symbols
    params = config.controller_params
    state = PortfolioState(cash=config.initial_capital, running_peak=config.initial_capital)
    previous = cash_decision(min(params.prior_exposure, config.constraints.max_equity_exposure))
    safety_active = False
    records: list[DailyRecord] = []
    curve: list[tuple[dt.date, float]] = []
    for i in days:
        today = view.dates[i]
        prices = {s: float(view.closes[i, j]) for j, s in enumerate(symbols)}
        vols = {s: float(view.symbol_vol[i, j]) for j, s in enumerate(symbols)}
        quotes = Quotes(today, prices, vols, config.rate)

        # 1. mark to market, settle expired legs
        equity_pnl = sum(state.shares(s) * (prices[s] - state.prices[s]) for s in state.prices)
        option_pnl = 0.0
        open_marks = {}
        for k, (sleeve, c) in list(state.option_positions.items()):
            m = quotes.option_mark(c)
            option_pnl += c.contracts * c.multiplier * (m - state.marks[k])
            open_marks[c.label() + "|" + sleeve] = m
            state.marks[k] = m
        state.prices = prices
        for k, (sleeve, c) in list(state.option_positions.items()):
            if trading_days_between(today, c.expiry) <= 0:
                state.cash += c.contracts * c.multiplier * state.marks[k]
                del state.option_positions[k]
                del state.marks[k]
        value_pre = state.value()
        peak = max(state.running_peak, value_pre)
        drawdown_pre = (peak - value_pre) / peak

        # 2-3. features and retrieval
        features, regime = _features_at(view, i, params)
        retrieved = []
        query = None
        if memory is not None:
            query = embed(features, stats)
            retrieved = retrieve_top_k(memory, query)

        # 4-6. decide, validate, safety
        ctx = DecisionContext(today, features, regime, retrieved, previous, config.run_id)
        decision = validate_decision(producer(ctx), config.constraints)
        verdict = None
        if config.safety_enabled:
            verdict = check_and_override(decision, drawdown_pre, safety_active, config.safety)
            safety_active = verdict.active
            decision = verdict.decision

        # 7. sleeve agents
        actions = []
        per_symbol_equity = decision.equity_exposure * value_pre / len(symbols)
        premiums = {s: _sleeve_premiums(prices[s], vols[s], config.agents, config.rate) for s in symbols}
        est = sum(decision.weights[sl] * per_symbol_equity / prices[s] * premiums[s][sl]
                  for s in symbols for sl in SLEEVES)
        budget = config.constraints.hedge_budget_fraction * value_pre
        scale = min(1.0, budget / est) if est > 0 else 1.0
        for j, s in enumerate(symbols):
            sf = _symbol_features(view, i, j)
            notional = {sl: decision.weights[sl] * per_symbol_equity * scale for sl in SLEEVES}
            actions.append((s, collar_step(sf, prices[s], notional["collar"], state.legs("collar", s), today,
                                           config.agents, symbol=s)))
            actions.append((s, straddle_step(sf, prices[s], notional["straddle"], state.legs("straddle", s),
                                             today, config.agents, symbol=s)))
            actions.append((s, delta_neutral_step(sf, prices[s], notional["delta_neutral"],
                                                  state.legs("delta_neutral", s), state.hedge_positions.get(s, 0.0),
                                                  today, config.agents, symbol=s, rate=config.rate)))

        # 8. execution
        adv = {s: float(view.dollar_volume_21d[i, j]) for j, s in enumerate(symbols)}
        state, fills, paid = execute_orders(state, actions, decision.equity_exposure, quotes, config.costs,
                                            config.constraints.liquidity_cap, adv, config.margin_floor,
                                            config.rebalance_band, portfolio_value=value_pre)
        value = state.value()
        if abs(value - (value_pre - paid)) > 1e-6 * max(1.0, abs(value_pre)):
            raise InternalError(f"{today}: fills at mark changed value by more than costs")

        # 9. record
        state.running_peak = max(peak, value)
        curve.append((today, value))
        state.equity_curve = curve
        records.append(DailyRecord(
            date=today, value=value, drawdown=(state.running_peak - value) / state.running_peak, costs=paid,
            equity_pnl=equity_pnl, option_pnl=option_pnl, cash=state.cash, decision=decision, safety=verdict,
            regime=regime, orders=fills, retrieved=len(retrieved),
            retrieval_calls=1 if memory is not None else 0,
            shares={s: state.shares(s) for s in symbols},
            positions=[{"sleeve": sl, "instrument": c.label(), "contracts": c.contracts, "mark": state.marks[k]}
                       for k, (sl, c) in sorted(state.option_positions.items(), key=lambda kv: repr(kv[0]))],
            open_marks=open_marks,
        ))

        # 10. memory update
        if memory is not None:
            ep = Episode(memory.next_id, today, query, decision, config.memory.horizon_days)
            store_and_backfill(memory, ep, today, curve)
        previous = decision
    return records


def _warm_memory(config: BacktestConfig, view: MarketView, stats) -> MemoryBuffer:
    memory = MemoryBuffer(config.memory.k, config.memory.retrieval_strength, config.memory.horizon_days)
    if not config.warm_start:
        return memory
    days = [i for i in view.window(config.calib_start, config.calib_end) if i >= LOOKBACK]
    replay = make_producer(config, "heuristic")
    simulate(config, view, days, replay, memory, stats)
    return clone_completed(memory)


def calibration_stats(config: BacktestConfig, view: MarketView):
    idx = [i for i in view.window(config.calib_start, config.calib_end) if i >= LOOKBACK]
    if len(idx) < 126:
        raise ConfigError(f"calibration window has {len(idx)} feature days, need 126")
    return stats_from_vectors(view.basket_features[idx])


def report_for(records: list[DailyRecord]) -> MetricsReport:
    return compute_all([r.value for r in records], [r.date for r in records])


def run_backtest(config: BacktestConfig, data: Mapping[str, PriceSeries],
                 producer: Producer | None = None, client=None) -> tuple[list[DailyRecord], MetricsReport]:
    config.validate()
    view = build_view(config.symbols, data, [(config.calib_start, config.calib_end),
                                             (config.eval_start, config.eval_end)])
    days = view.window(config.eval_start, config.eval_end)
    if len(days) < 2:
        raise ConfigError("evaluation window needs at least two trading days")
    memory = stats = None
    if config.memory_enabled:
        stats = calibration_stats(config, view)
        memory = _warm_memory(config, view, stats)
    producer = producer or make_producer(config, client=client)
    records = simulate(config, view, days, producer, memory, stats)
    return records, report_for(records)


def run_per_asset(config: BacktestConfig, data: Mapping[str, PriceSeries], producer: Producer | None = None,
                  client=None) -> tuple[dict[str, list[DailyRecord]], MetricsReport]:
    """Independent single-symbol runs with capital split equally; metrics on the summed curve."""
    config.validate()
    n = len(config.symbols)
    out: dict[str, list[DailyRecord]] = {}
    for s in config.symbols:
        sub = replace(config, symbols=(s,), initial_capital=config.initial_capital / n,
                      portfolio_mode="joint", run_id=f"{config.run_id}:{s}")
        out[s] = run_backtest(sub, {s: data[s]} if s in data else {}, producer, client)[0]
    dates = [r.date for r in next(iter(out.values()))]
    for s, recs in out.items():
        if [r.date for r in recs] != dates:
            raise DataError(f"{s}: evaluation dates differ from {config.symbols[0]}")
    total = [sum(out[s][t].value for s in config.symbols) for t in range(len(dates))]
    return out, compute_all(total, dates)


# --------------------------------------------------------------------------- baselines


def run_baseline(kind: str, config: BacktestConfig,
                 data: Mapping[str, PriceSeries]) -> tuple[list[DailyRecord], MetricsReport]:
    """Buy-and-hold (equal dollars on day one) or monthly-rebalanced equal weight."""
    if kind not in ("buy_and_hold", "equal_weight"):
        raise ConfigError(f"unknown baseline {kind!r}")
    config.validate()
    view = build_view(config.symbols, data, [(config.eval_start, config.eval_end)])
    days = view.window(config.eval_start, config.eval_end)
    if len(days) < 2:
        raise ConfigError("evaluation window needs at least two trading days")
    symbols = view.symbols
    n = len(symbols)
    cash = config.initial_capital
    shares = {s: 0.0 for s in symbols}
    peak = config.initial_capital
    last_prices = None
    last_month = None
    records = []
    for step, i in enumerate(days):
        today = view.dates[i]
        prices = {s: float(view.closes[i, j]) for j, s in enumerate(symbols)}
        equity_pnl = 0.0 if last_prices is None else sum(shares[s] * (prices[s] - last_prices[s]) for s in symbols)
        value_pre = cash + sum(shares[s] * prices[s] for s in symbols)
        fills, paid = [], 0.0
        month = (today.year, today.month)
        trade = step == 0 if kind == "buy_and_hold" else month != last_month
        if trade:
            bps = config.costs.equity_bps * 1e-4
            target_value = value_pre / n
            for s in symbols:
                if step == 0:
                    # size so that the cost is paid out of the allocation
                    qty = target_value / (prices[s] * (1.0 + bps)) - shares[s]
                else:
                    qty = target_value / prices[s] - shares[s]
                if qty == 0:
                    continue
                cost = config.costs.equity_cost(qty * prices[s])
                cash -= qty * prices[s] + cost
                shares[s] += qty
                paid += cost
                fills.append(Fill("baseline", s, qty, prices[s], cost))
        value = cash + sum(shares[s] * prices[s] for s in symbols)
        peak = max(peak, value)
        records.append(DailyRecord(date=today, value=value, drawdown=(peak - value) / peak, costs=paid,
                                   equity_pnl=equity_pnl, option_pnl=0.0, cash=cash, orders=fills,
                                   shares=dict(shares)))
        last_prices, last_month = prices, month
    return records, report_for(records)

