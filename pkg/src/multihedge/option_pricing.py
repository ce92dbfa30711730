"""European option values and deltas under the lognormal model (no dividends)."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import DomainError

Kind = Literal["call", "put"]
_SQRT2 = math.sqrt(2.0)


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


@dataclass(frozen=True)
class PricingInputs:
    spot: float
    strike: float
    time_to_expiry: float
    volatility: float
    rate: float = 0.0

    def __post_init__(self):
        if not self.spot > 0:
            raise DomainError(f"spot must be positive, got {self.spot}")
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")
        if self.time_to_expiry < 0 or self.volatility < 0:
            raise DomainError("time_to_expiry and volatility must be non-negative")

    @property
    def degenerate(self) -> bool:
        return self.time_to_expiry <= 0.0 or self.volatility <= 0.0

    def discount(self) -> float:
        return math.exp(-self.rate * self.time_to_expiry)


def _d1_d2(p: PricingInputs) -> tuple[float, float]:
    vs = p.volatility * math.sqrt(p.time_to_expiry)
    d1 = (math.log(p.spot / p.strike) + (p.rate + 0.5 * p.volatility**2) * p.time_to_expiry) / vs
    return d1, d1 - vs


def _check_kind(kind: str) -> None:
    if kind not in ("call", "put"):
        raise DomainError(f"unknown option kind {kind!r}")


def price(inputs: PricingInputs, kind: Kind) -> float:
    """Value per share. Zero time or zero vol gives the discounted intrinsic value."""
    _check_kind(kind)
    df = inputs.discount()
    fwd_strike = inputs.strike * df
    if inputs.degenerate:
        if kind == "call":
            return max(inputs.spot - fwd_strike, 0.0)
        return max(fwd_strike - inputs.spot, 0.0)
    d1, d2 = _d1_d2(inputs)
    if kind == "call":
        return inputs.spot * norm_cdf(d1) - fwd_strike * norm_cdf(d2)
    return fwd_strike * norm_cdf(-d2) - inputs.spot * norm_cdf(-d1)


def delta(inputs: PricingInputs, kind: Kind) -> float:
    _check_kind(kind)
    if inputs.degenerate:
        fwd_strike = inputs.strike * inputs.discount()
        if inputs.spot > fwd_strike:
            call = 1.0
        elif inputs.spot < fwd_strike:
            call = 0.0
        else:
            call = 0.5
    else:
        call = norm_cdf(_d1_d2(inputs)[0])
    return call if kind == "call" else call - 1.0


@dataclass(frozen=True)
class OptionContract:
    underlying: str
    kind: Kind
    strike: float
    expiry: dt.date
    contracts: int = 1
    multiplier: int = 100

    def __post_init__(self):
        _check_kind(self.kind)
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")
        if self.multiplier < 1:
            raise DomainError("multiplier must be >= 1")

    @property
    def key(self) -> tuple:
        """Identity of the instrument, independent of position size."""
        return (self.underlying, self.kind, self.strike, self.expiry, self.multiplier)

    def label(self) -> str:
        return f"{self.underlying}:{self.kind}:{self.strike!r}:{self.expiry.isoformat()}:{self.multiplier}"

    def with_contracts(self, contracts: int) -> "OptionContract":
        return replace(self, contracts=int(contracts))


@lru_cache(maxsize=65536)
def trading_days_between(start: dt.date, end: dt.date) -> int:
    return int(np.busday_count(start, end))


def year_fraction(today: dt.date, expiry: dt.date) -> float:
    return max(trading_days_between(today, expiry), 0) / 252.0


def mark(contract: OptionContract, spot: float, today: dt.date, volatility: float, rate: float = 0.0) -> float:
    """Per-share model value of ``contract`` on ``today``."""
    inputs = PricingInputs(spot, contract.strike, year_fraction(today, contract.expiry), volatility, rate)
    return price(inputs, contract.kind)


def contract_delta(contract: OptionContract, spot: float, today: dt.date, volatility: float,
                   rate: float = 0.0) -> float:
    inputs = PricingInputs(spot, contract.strike, year_fraction(today, contract.expiry), volatility, rate)
    return delta(inputs, contract.kind)


def payoff_at_expiry(contract: OptionContract, spot: float) -> float:
    if not spot > 0:
        raise DomainError(f"spot must be positive, got {spot}")
    if contract.kind == "call":
        intrinsic = max(spot - contract.strike, 0.0)
    else:
        intrinsic = max(contract.strike - spot, 0.0)
    return intrinsic * contract.contracts * contract.multiplier
