"""Bundled synthetic market scenarios with their calibration/evaluation windows."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .market_data import PriceSeries, RegimeSpec, business_days, generate_regime_switching


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: RegimeSpec
    start: dt.date
    end: dt.date
    calib_start: dt.date
    calib_end: dt.date
    eval_start: dt.date
    eval_end: dt.date
    start_price: float = 100.0
    symbol: str = "SYN"
    # optional fixed regime timetable: (first date, regime) pairs, replacing the Markov draw
    schedule: tuple[tuple[dt.date, int], ...] = ()

    def days(self) -> int:
        return int(np.busday_count(self.start, self.end + dt.timedelta(days=1)))

    def regime_path(self) -> np.ndarray | None:
        if not self.schedule:
            return None
        dates = business_days(self.start, self.days())
        path = np.full(len(dates), self.spec.initial, dtype=int)
        for first, regime in sorted(self.schedule):
            path[[i for i, d in enumerate(dates) if d >= first]] = regime
        return path

    def generate(self, seed: int) -> tuple[dict[str, PriceSeries], np.ndarray]:
        series, regimes = generate_regime_switching(self.spec, self.days(), self.start_price, seed,
                                                    symbol=self.symbol, start_date=self.start,
                                                    regimes=self.regime_path())
        return {self.symbol: series}, regimes


# bull / sideways / bear-crash; mean regime durations ~ 100 / 50 / 33 days
THREE_REGIME = Scenario(
    name="three_regime",
    spec=RegimeSpec(
        drifts=(0.20, 0.00, -0.40),
        vols=(0.14, 0.20, 0.45),
        transition=(
            (0.990, 0.006, 0.004),
            (0.012, 0.976, 0.012),
            (0.015, 0.015, 0.970),
        ),
    ),
    start=dt.date(2015, 9, 1),
    end=dt.date(2023, 12, 29),
    calib_start=dt.date(2016, 1, 1),
    calib_end=dt.date(2020, 12, 31),
    eval_start=dt.date(2021, 1, 1),
    eval_end=dt.date(2023, 12, 29),
)

# calm market with one scheduled quarter-long crash (-40%/yr drift, 45% vol) starting a month
# into evaluation, so every seed breaches the safety threshold inside the evaluation window
CRASH = Scenario(
    name="crash",
    spec=RegimeSpec(
        drifts=(0.10, -0.40),
        vols=(0.15, 0.45),
        transition=((1.0, 0.0), (0.0, 1.0)),
        initial=0,
    ),
    start=dt.date(2019, 9, 2),
    end=dt.date(2021, 12, 31),
    calib_start=dt.date(2020, 1, 1),
    calib_end=dt.date(2020, 12, 31),
    eval_start=dt.date(2021, 1, 1),
    eval_end=dt.date(2021, 12, 31),
    schedule=((dt.date(2021, 2, 1), 1), (dt.date(2021, 5, 3), 0)),
)

SCENARIOS = {s.name: s for s in (THREE_REGIME, CRASH)}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
