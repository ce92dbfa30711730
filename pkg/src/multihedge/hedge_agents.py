"""Collar, straddle and delta-neutral sleeve agents.

Each agent is a pure function from (features, spot, sleeve notional, open legs,
date, params) to a list of orders. Sleeves never share option legs.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .market_data import MarketFeatures
from .option_pricing import OptionContract, contract_delta, trading_days_between


@dataclass(frozen=True)
class AgentParams:
    put_strike_offset: float = 0.90
    call_strike_offset: float = 1.10
    straddle_strike_offset: float = 1.00
    tenor_days: int = 63
    roll_window_days: int = 5
    delta_tolerance: float = 0.05
    multiplier: int = 100

    def validate(self) -> None:
        if not 0 < self.put_strike_offset < 1 < self.call_strike_offset:
            raise ConfigError("collar offsets must satisfy 0 < put < 1 < call")
        if not self.tenor_days > self.roll_window_days >= 1:
            raise ConfigError("need tenor_days > roll_window_days >= 1")
        if not self.delta_tolerance > 0:
            raise ConfigError("delta_tolerance must be positive")
        if not self.straddle_strike_offset > 0 or self.multiplier < 1:
            raise ConfigError("invalid straddle offset or multiplier")


@dataclass(frozen=True)
class Order:
    """Signed trade in one instrument: a ticker (shares) or an option (contracts)."""

    instrument: str | OptionContract
    quantity: float

    @property
    def is_option(self) -> bool:
        return isinstance(self.instrument, OptionContract)


@dataclass(frozen=True)
class HedgeAction:
    sleeve: str
    orders: list[Order] = field(default_factory=list)


def lot_count(notional: float, spot: float, multiplier: int) -> int:
    if notional <= 0:
        return 0
    # tolerance keeps exact multiples (100000 / (100 * 100)) from flooring down
    return int(math.floor(notional / (spot * multiplier) + 1e-9))


def expiry_after(today: dt.date, trading_days: int) -> dt.date:
    return np.busday_offset(np.datetime64(today, "D"), trading_days, roll="forward").astype(dt.date)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _adjust(legs: list[OptionContract], target: int, fresh: OptionContract) -> list[Order]:
    """Orders moving the summed contracts of ``legs`` to ``target``.

    Growth opens ``fresh`` (current strikes); shrinkage trims the newest legs first.
    """
    orders = []
    current = sum(leg.contracts for leg in legs)
    if target == 0 or (current != 0 and _sign(current) != _sign(target)):
        orders.extend(Order(leg, -leg.contracts) for leg in legs if leg.contracts)
        legs, current = [], 0
    if abs(target) > abs(current):
        diff = target - current
        orders.append(Order(fresh.with_contracts(diff), diff))
    elif abs(target) < abs(current):
        excess = current - target
        for leg in sorted(legs, key=lambda c: (c.expiry, c.strike), reverse=True):
            if excess == 0:
                break
            take = _sign(excess) * min(abs(excess), abs(leg.contracts))
            orders.append(Order(leg, -take))
            excess -= take
    return orders


def _split_rolls(legs, today: dt.date, params: AgentParams):
    keep, orders = [], []
    for leg in legs:
        if trading_days_between(today, leg.expiry) <= params.roll_window_days:
            orders.append(Order(leg, -leg.contracts))
        else:
            keep.append(leg)
    return keep, orders


def _two_leg_step(sleeve, spot, sleeve_notional, current_legs, today, params, symbol,
                  put_strike, call_strike, put_sign, call_sign) -> HedgeAction:
    lots = lot_count(sleeve_notional, spot, params.multiplier)
    keep, orders = _split_rolls(current_legs, today, params)
    expiry = expiry_after(today, params.tenor_days)
    underlying = symbol or _underlying_of(current_legs)
    fresh_put = OptionContract(underlying, "put", put_strike, expiry, 0, params.multiplier)
    fresh_call = OptionContract(underlying, "call", call_strike, expiry, 0, params.multiplier)
    orders += _adjust([c for c in keep if c.kind == "put"], put_sign * lots, fresh_put)
    orders += _adjust([c for c in keep if c.kind == "call"], call_sign * lots, fresh_call)
    return HedgeAction(sleeve, orders)


def collar_step(features: MarketFeatures, spot: float, sleeve_notional: float,
                current_legs: list[OptionContract], today: dt.date, params: AgentParams = AgentParams(),
                symbol: str | None = None) -> HedgeAction:
    """Long OTM puts and short OTM calls covering ``sleeve_notional / spot`` shares."""
    return _two_leg_step("collar", spot, sleeve_notional, current_legs, today, params, symbol,
                         params.put_strike_offset * spot, params.call_strike_offset * spot, +1, -1)


def straddle_step(features: MarketFeatures, spot: float, sleeve_notional: float,
                  current_legs: list[OptionContract], today: dt.date, params: AgentParams = AgentParams(),
                  symbol: str | None = None) -> HedgeAction:
    k = params.straddle_strike_offset * spot
    return _two_leg_step("straddle", spot, sleeve_notional, current_legs, today, params, symbol,
                         k, k, +1, +1)


def apply_orders(legs: list[OptionContract], orders: list[Order]) -> list[OptionContract]:
    """Resulting option legs after ``orders`` (equity orders ignored)."""
    book: dict[tuple, OptionContract] = {leg.key: leg for leg in legs}
    for o in orders:
        if not o.is_option:
            continue
        k = o.instrument.key
        held = book[k].contracts if k in book else 0
        book[k] = o.instrument.with_contracts(held + int(o.quantity))
    return [c for c in book.values() if c.contracts != 0]


def net_delta_shares(legs: list[OptionContract], hedge_shares: float, spot: float, today: dt.date,
                     volatility: float, rate: float = 0.0) -> float:
    return hedge_shares + sum(
        contract_delta(c, spot, today, volatility, rate) * c.contracts * c.multiplier for c in legs
    )


def delta_neutral_step(features: MarketFeatures, spot: float, sleeve_notional: float,
                       current_legs: list[OptionContract], equity_hedge_shares: float, today: dt.date,
                       params: AgentParams = AgentParams(), symbol: str | None = None,
                       rate: float = 0.0) -> HedgeAction:
    """Long straddle plus an underlying hedge keeping the sleeve delta inside the dead-band."""
    straddle = straddle_step(features, spot, sleeve_notional, current_legs, today, params, symbol)
    orders = list(straddle.orders)
    if sleeve_notional <= 0:
        if equity_hedge_shares:
            orders.append(Order(symbol or _underlying_of(current_legs), -equity_hedge_shares))
        return HedgeAction("delta_neutral", orders)
    legs_after = apply_orders(current_legs, orders)
    net = net_delta_shares(legs_after, equity_hedge_shares, spot, today, features.realized_vol_21d, rate)
    band = params.delta_tolerance * sleeve_notional / spot
    if abs(net) > band:
        orders.append(Order(symbol or _underlying_of(legs_after), -net))
    return HedgeAction("delta_neutral", orders)


def _underlying_of(legs) -> str:
    for leg in legs:
        if leg.underlying:
            return leg.underlying
    return ""
