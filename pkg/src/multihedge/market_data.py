"""Daily bars, synthetic regime-switching paths and the observable feature vector."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, InsufficientHistoryError, OrderingError, ParseError

CSV_HEADER = ["date", "open", "high", "low", "close", "volume"]
TRADING_DAYS = 252
LOOKBACK = 63

# Order of the continuous (z-scored) feature dimensions; the regime one-hot follows.
SCALED_FEATURES = (
    "returns_1d",
    "returns_5d",
    "returns_21d",
    "realized_vol_21d",
    "realized_vol_63d",
    "drawdown_from_peak",
    "trend_21d",
)
N_REGIMES = 3
FEATURE_DIM = len(SCALED_FEATURES) + N_REGIMES


@dataclass(frozen=True)
class Bar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            value = getattr(self, name)
            if not (value > 0) or not math.isfinite(value):
                raise DomainError(f"{self.date}: {name} must be strictly positive, got {value}")
        if self.volume < 0:
            raise DomainError(f"{self.date}: negative volume {self.volume}")
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise DomainError(f"{self.date}: high/low do not bracket open/close")


@dataclass(frozen=True)
class PriceSeries:
    symbol: str
    bars: tuple[Bar, ...]

    def __post_init__(self):
        if not self.bars:
            raise DomainError(f"{self.symbol}: empty price series")
        object.__setattr__(self, "bars", tuple(self.bars))
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise OrderingError(f"{self.symbol}: dates not strictly increasing at {cur.date}")

    def __len__(self) -> int:
        return len(self.bars)

    @cached_property
    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=float)

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.array([b.volume for b in self.bars], dtype=float)

    @cached_property
    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    @cached_property
    def index_of(self) -> dict[dt.date, int]:
        return {d: i for i, d in enumerate(self.dates)}

    @classmethod
    def from_closes(cls, symbol: str, dates: Sequence[dt.date], closes: Sequence[float],
                    volume: float = 0.0) -> "PriceSeries":
        """Build a close-only series (open = high = low = close)."""
        bars = tuple(Bar(d, c, c, c, c, volume) for d, c in zip(dates, closes))
        return cls(symbol, bars)


def load_csv(path: str | Path, symbol: str | None = None) -> PriceSeries:
    path = Path(path)
    symbol = symbol or path.stem
    bars = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header row", 1) from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"header must be {','.join(CSV_HEADER)!r}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", lineno)
            try:
                date = dt.date.fromisoformat(row[0].strip())
                o, h, lo, c, v = (float(x) for x in row[1:])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if bars and date <= bars[-1].date:
                raise OrderingError(f"line {lineno}: date {date} does not follow {bars[-1].date}")
            try:
                bars.append(Bar(date, o, h, lo, c, v))
            except DomainError as exc:
                raise DomainError(f"line {lineno}: {exc}") from None
    return PriceSeries(symbol, tuple(bars))


def csv_text(series: PriceSeries) -> str:
    """Canonical CSV rendering (round-trips exactly through ``load_csv``)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for b in series.bars:
        writer.writerow([b.date.isoformat(), repr(b.open), repr(b.high), repr(b.low),
                         repr(b.close), repr(b.volume)])
    return buf.getvalue()


def write_csv(series: PriceSeries, path: str | Path) -> None:
    Path(path).write_text(csv_text(series))


# --------------------------------------------------------------------------- synthetic paths


@dataclass(frozen=True)
class RegimeSpec:
    drifts: tuple[float, ...]
    vols: tuple[float, ...]
    transition: tuple[tuple[float, ...], ...]
    initial: int = 0

    def validate(self) -> None:
        n = len(self.drifts)
        if n < 1:
            raise ConfigError("regime spec needs at least one regime")
        if len(self.vols) != n or len(self.transition) != n:
            raise ConfigError("drifts, vols and transition rows must have equal length")
        # vol == 0 is accepted as a degenerate (deterministic) regime
        if any(v < 0 or not math.isfinite(v) for v in self.vols):
            raise ConfigError("regime volatilities must be non-negative")
        for row in self.transition:
            if len(row) != n or any(p < 0 for p in row) or abs(sum(row) - 1.0) > 1e-12:
                raise ConfigError(f"transition row {row} is not a probability vector")
        if not 0 <= self.initial < n:
            raise ConfigError(f"initial regime {self.initial} out of range")


def business_days(start: dt.date, count: int) -> list[dt.date]:
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    days = np.busday_offset(first, np.arange(count), roll="forward")
    return [d.astype(dt.date) for d in days]


def generate_regime_switching(
    spec: RegimeSpec,
    days: int,
    start_price: float,
    seed: int,
    symbol: str = "SYN",
    start_date: dt.date = dt.date(2015, 1, 1),
    volume: float = 1e7,
    regimes: Sequence[int] | None = None,
) -> tuple[PriceSeries, np.ndarray]:
    """Markov-switching geometric Brownian motion on business days.

    Returns the series and the regime label of each day. Day 0 is the initial
    regime at ``start_price``; the return into day i uses the regime of day i.
    A supplied ``regimes`` path replaces the Markov draw (the shocks are
    unchanged, so a schedule only alters drift and volatility).
    """
    spec.validate()
    if days < 1:
        raise ConfigError("days must be >= 1")
    if not start_price > 0:
        raise ConfigError("start_price must be positive")
    rng = np.random.default_rng(seed)
    uniforms = rng.random(days)
    shocks = rng.standard_normal(days)
    if regimes is not None:
        regimes = np.asarray(regimes, dtype=int)
        if regimes.shape != (days,) or regimes.min() < 0 or regimes.max() >= len(spec.drifts):
            raise ConfigError(f"regime path must have {days} labels in [0, {len(spec.drifts)})")
    else:
        cum = np.cumsum(np.asarray(spec.transition, dtype=float), axis=1)
        regimes = np.empty(days, dtype=int)
        regimes[0] = spec.initial
        for i in range(1, days):
            row = cum[regimes[i - 1]]
            regimes[i] = min(int(np.searchsorted(row, uniforms[i], side="right")), len(row) - 1)
    mu = np.asarray(spec.drifts, dtype=float)[regimes]
    sigma = np.asarray(spec.vols, dtype=float)[regimes]
    dt_year = 1.0 / TRADING_DAYS
    log_ret = (mu - 0.5 * sigma**2) * dt_year + sigma * math.sqrt(dt_year) * shocks
    log_ret[0] = 0.0
    closes = start_price * np.exp(np.cumsum(log_ret))
    dates = business_days(start_date, days)
    bars = []
    prev = start_price
    for d, c in zip(dates, closes):
        c = float(c)
        bars.append(Bar(d, prev, max(prev, c), min(prev, c), c, volume))
        prev = c
    return PriceSeries(symbol, tuple(bars)), regimes


# --------------------------------------------------------------------------- features


@dataclass(frozen=True)
class MarketFeatures:
    returns_1d: float
    returns_5d: float
    returns_21d: float
    realized_vol_21d: float
    realized_vol_63d: float
    drawdown_from_peak: float
    trend_21d: float
    regime_onehot: tuple[int, int, int] = (1, 0, 0)

    def scaled_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in SCALED_FEATURES], dtype=float)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.scaled_vector(), np.asarray(self.regime_onehot, dtype=float)])

    def as_dict(self) -> dict:
        out = {name: float(getattr(self, name)) for name in SCALED_FEATURES}
        out["regime_onehot"] = list(self.regime_onehot)
        return out

    @property
    def regime_index(self) -> int:
        return self.regime_onehot.index(1)

    def with_regime(self, regime_index: int) -> "MarketFeatures":
        return MarketFeatures(*self.scaled_vector().tolist(), regime_onehot=onehot(regime_index))


def onehot(index: int) -> tuple[int, int, int]:
    if not 0 <= index < N_REGIMES:
        raise DomainError(f"regime index {index} out of range")
    v = [0] * N_REGIMES
    v[index] = 1
    return tuple(v)


def _slope(y: np.ndarray) -> float:
    x = np.arange(len(y), dtype=float)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def realized_vol(closes: np.ndarray, t: int, window: int) -> float:
    """Annualized population stdev of the last ``window`` daily log returns ending at t."""
    if t < window:
        raise InsufficientHistoryError(f"need {window} prior closes at index {t}")
    lr = np.diff(np.log(closes[t - window : t + 1]))
    return float(lr.std() * math.sqrt(TRADING_DAYS))


def compute_features(series: PriceSeries, t: int, regime_label: int = 0) -> MarketFeatures:
    if t < LOOKBACK:
        raise InsufficientHistoryError(f"feature lookback needs t >= {LOOKBACK}, got {t}")
    if t >= len(series):
        raise DomainError(f"day index {t} beyond series of length {len(series)}")
    c = series.closes[: t + 1]
    peak = c.max()
    return MarketFeatures(
        returns_1d=float(c[t] / c[t - 1] - 1.0),
        returns_5d=float(c[t] / c[t - 5] - 1.0),
        returns_21d=float(c[t] / c[t - 21] - 1.0),
        realized_vol_21d=realized_vol(c, t, 21),
        realized_vol_63d=realized_vol(c, t, 63),
        drawdown_from_peak=float((peak - c[t]) / peak),
        trend_21d=_slope(np.log(c[t - 20 : t + 1])),
        regime_onehot=onehot(regime_label),
    )


def feature_matrix(closes: np.ndarray) -> np.ndarray:
    """Scaled features for every index (rows before LOOKBACK are NaN).

    Vectorized equivalent of ``compute_features(...).scaled_vector()``.
    """
    closes = np.asarray(closes, dtype=float)
    n = len(closes)
    out = np.full((n, len(SCALED_FEATURES)), np.nan)
    if n <= LOOKBACK:
        return out
    sw = np.lib.stride_tricks.sliding_window_view
    ts = np.arange(LOOKBACK, n)
    c = closes
    out[ts, 0] = c[ts] / c[ts - 1] - 1.0
    out[ts, 1] = c[ts] / c[ts - 5] - 1.0
    out[ts, 2] = c[ts] / c[ts - 21] - 1.0
    lr = np.diff(np.log(c))  # lr[j-1] is the log return into day j
    ann = math.sqrt(TRADING_DAYS)
    out[ts, 3] = sw(lr, 21)[ts - 21].std(axis=1) * ann
    out[ts, 4] = sw(lr, 63)[ts - 63].std(axis=1) * ann
    peak = np.maximum.accumulate(c)
    out[ts, 5] = (peak[ts] - c[ts]) / peak[ts]
    logc = sw(np.log(c), 21)[ts - 20]
    xc = np.arange(21, dtype=float) - 10.0
    out[ts, 6] = (logc - logc.mean(axis=1, keepdims=True)) @ xc / np.dot(xc, xc)
    return out


# --------------------------------------------------------------------------- calibration


@dataclass(frozen=True)
class CalibrationStats:
    mean: np.ndarray
    std: np.ndarray
    flagged: tuple[bool, ...] = field(default=())

    def zscore(self, scaled: np.ndarray) -> np.ndarray:
        return (np.asarray(scaled, dtype=float) - self.mean) / self.std

    def unzscore(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean


def stats_from_vectors(vectors: np.ndarray) -> CalibrationStats:
    """Population mean/std per column; zero-variance columns get std 1 and are flagged."""
    vectors = np.asarray(vectors, dtype=float)
    mean = vectors.mean(axis=0)
    std = vectors.std(axis=0)
    flagged = tuple(bool(s <= 0.0) for s in std)
    std = np.where(std > 0.0, std, 1.0)
    return CalibrationStats(mean, std, flagged)


def window_indices(series: PriceSeries, start: dt.date, end: dt.date) -> list[int]:
    return [i for i, d in enumerate(series.dates) if start <= d <= end]


def calibrate(series: PriceSeries, window: tuple[dt.date, dt.date], min_days: int = 126) -> CalibrationStats:
    idx = [i for i in window_indices(series, *window) if i >= LOOKBACK]
    if len(idx) < min_days:
        raise ConfigError(
            f"calibration window {window[0]}..{window[1]} has {len(idx)} feature days, need {min_days}"
        )
    return stats_from_vectors(feature_matrix(series.closes)[idx])
